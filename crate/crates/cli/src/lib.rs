//! Front end for the `segver` binary: argument parsing, command dispatch and
//! the report formats.

pub mod config;
pub mod record;
pub mod scan;
pub mod suites;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;

use segver::bounds::{main_bound, reproduce_table};
use segver::jets::{jet_rank_profile, secant_rank, segre_veronese_map, Limits, PointSample, Verdict};
use segver::osculation::{osc_basis, osc_dim_formula, OsculatingCenter};
use segver::{Error, Shape};

use config::{exit, Budget, Failure, PrimeChoice};
use record::{Query, Subject, VerdictRecord};
use scan::{HMode, ScanPlan};
use suites::{Suite, SuiteOptions};

#[derive(Debug, Parser)]
#[command(name = "segver", version, about = "Osculating spaces, secant dimensions and non-defectivity bounds of Segre-Veronese varieties")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Emit a JSON record instead of the human report
    #[arg(long, global = true)]
    pub json: bool,
    /// Modulus for rank computations, or `auto` for a random 62-bit prime
    #[arg(long, global = true, env = "SEGVER_PRIME", default_value = "4611686018427387847")]
    pub prime: PrimeChoice,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 2)]
    pub trials: u32,
    /// Cap on jet or Terracini matrix rows
    #[arg(long, global = true, env = "SEGVER_MAX_ROWS")]
    pub max_rows: Option<usize>,
    /// Cap on columns (N+1) for dense elimination
    #[arg(long, global = true, env = "SEGVER_MAX_COLS")]
    pub max_cols: Option<usize>,
    /// Cap on |Lambda| for enumerations
    #[arg(long, global = true, env = "SEGVER_MAX_LAMBDA")]
    pub max_lambda: Option<usize>,
}

impl Global {
    pub fn budget(&self) -> Budget {
        let mut b = Budget::default();
        let Limits { max_rows, max_cols, .. } = b.limits;
        b.limits.max_rows = self.max_rows.unwrap_or(max_rows);
        b.limits.max_cols = self.max_cols.unwrap_or(max_cols);
        if let Some(l) = self.max_lambda {
            b.max_lambda = l;
        }
        b
    }
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Factor dimensions, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    /// Factor degrees, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub d: Vec<u32>,
}

impl ShapeArgs {
    fn shape(&self) -> Result<Shape, Failure> {
        Ok(Shape::new(&self.n, &self.d)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimension of the osculating space of order S at a coordinate point
    OscDim {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        order: u32,
        /// Also enumerate the basis and compute the jet rank at a random point
        #[arg(long)]
        check: bool,
    },
    /// Dimension of the h-th secant variety by Terracini's lemma
    SecDim {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        h: u32,
    },
    /// The non-defectivity bound for a shape
    Bound {
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Closed forms of the bound for small odd d
    Table {
        #[arg(long)]
        n1: u32,
        #[arg(long)]
        csv: bool,
    },
    /// Run a curated suite of checks
    Verify {
        #[arg(long)]
        suite: Suite,
        /// Largest |Lambda| swept by the regularity suite
        #[arg(long, default_value_t = 20)]
        scope: u64,
    },
    /// Sweep shapes and record secant verdicts as JSON lines
    Scan {
        /// Largest dimension of each factor; the list length fixes the number of factors
        #[arg(long, value_delimiter = ',', required = true)]
        n_max: Vec<u32>,
        /// Largest total degree
        #[arg(long)]
        d_max: u32,
        #[arg(long, value_enum, default_value_t = HMode::Bound)]
        h_mode: HMode,
        /// Added to the largest h of each shape (negative controls)
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        bound_offset: i64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs a parsed command, writing the report to `out`. Returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<u8, Failure> {
    let start = Instant::now();
    let g = &cli.global;
    let budget = g.budget();
    let (rec, code) = match &cli.command {
        Command::OscDim { shape, order, check } => osc_dim(&shape.shape()?, *order, *check, g, &budget)?,
        Command::SecDim { shape, h } => sec_dim(&shape.shape()?, *h, g, &budget)?,
        Command::Bound { shape } => bound(&shape.shape()?),
        Command::Table { n1, csv } => {
            let (rec, code) = table(*n1)?;
            if *csv {
                write_csv(*n1, out)?;
                return Ok(code);
            }
            (rec, code)
        }
        Command::Verify { suite, scope } => verify(*suite, *scope, g, &budget)?,
        Command::Scan {
            n_max,
            d_max,
            h_mode,
            bound_offset,
            jobs,
            out: path,
        } => {
            let plan = ScanPlan {
                n_max: n_max.clone(),
                d_max: *d_max,
                h_mode: *h_mode,
                bound_offset: *bound_offset,
                jobs: *jobs,
            };
            let cfg = budget.rank_config(g.prime.field()?, g.seed, g.trials);
            let file = std::fs::File::create(path).map_err(Failure::io)?;
            let mut w = std::io::BufWriter::new(file);
            let s = scan::run_scan(&plan, &cfg, &mut w).map_err(Failure::io)?;
            writeln!(
                out,
                "{} shapes, {} records, {} defect_suspected ({} within the bound), {} refused",
                s.shapes, s.records, s.defect_suspected, s.contradictions, s.refused
            )
            .map_err(Failure::io)?;
            return Ok(if s.contradictions > 0 {
                exit::DEFECT_SUSPECTED
            } else if s.refused > 0 {
                exit::RESOURCE_REFUSAL
            } else {
                exit::OK
            });
        }
    };
    let mut rec = rec;
    rec.wall_ms = start.elapsed().as_millis() as u64;
    if g.json {
        serde_json::to_writer(&mut *out, &rec).map_err(Failure::io)?;
        writeln!(out).map_err(Failure::io)?;
    } else {
        human(&rec, out).map_err(Failure::io)?;
    }
    Ok(code)
}

type Outcome = Result<(VerdictRecord, u8), Failure>;

fn osc_dim(shape: &Shape, s: u32, check: bool, g: &Global, budget: &Budget) -> Outcome {
    let formula = osc_dim_formula(shape, s);
    let mut rec = VerdictRecord::new(Query::OscDim, Subject::Shape(shape.clone()))
        .input("order", s)
        .result("dim", formula.to_string());
    if !check {
        return Ok((rec.verdict("ok"), exit::OK));
    }
    let size = shape.lambda_size().unwrap_or(usize::MAX);
    if size > budget.max_lambda {
        return Err(Error::ResourceLimit {
            what: "|Lambda|".into(),
            requested: shape.ambient_count().to_u128().unwrap_or(u128::MAX),
            limit: budget.max_lambda as u128,
        }
        .into());
    }
    let corner = vec![0u16; shape.factors()];
    let basis = osc_basis(shape, &OsculatingCenter::new(corner, s))?.len();
    let field = g.prime.field()?;
    let map = segre_veronese_map(shape, budget.limits.max_cols)?;
    let point = PointSample::random(&map, &field, g.seed, 0, 0);
    let rank = *jet_rank_profile(&map, &field, &point, s, &budget.limits)?
        .last()
        .expect("order s is present");
    let ok = formula.to_usize() == Some(basis - 1) && basis == rank;
    rec = rec.result("basis_size", basis).result("jet_rank", rank);
    rec.prime = Some(field.modulus());
    rec.seed = Some(g.seed);
    Ok(if ok {
        (rec.verdict("ok"), exit::OK)
    } else {
        (rec.verdict("mismatch"), exit::VERIFICATION_FAILED)
    })
}

fn sec_dim(shape: &Shape, h: u32, g: &Global, budget: &Budget) -> Outcome {
    let cfg = budget.rank_config(g.prime.field()?, g.seed, g.trials);
    let map = segre_veronese_map(shape, budget.limits.max_cols)?;
    let r = secant_rank(&map, h, &cfg)?;
    let code = match r.verdict {
        Verdict::NotDefectiveCertified => exit::OK,
        Verdict::DefectSuspected => exit::DEFECT_SUSPECTED,
    };
    Ok((VerdictRecord::from_rank(shape, &r), code))
}

fn bound(shape: &Shape) -> (VerdictRecord, u8) {
    let r = main_bound(shape);
    let show = |v: &Option<num_bigint::BigUint>| v.as_ref().map(ToString::to_string);
    let rec = VerdictRecord::new(Query::Bound, Subject::Shape(shape.clone()))
        .result("h_main", show(&r.h_main))
        .result("h_baseline", r.h_baseline.to_string())
        .result("h_asymptotic", show(&r.h_asymptotic))
        .result("lambdas", r.decomposition.map(|p| p.lambdas))
        .verdict("ok");
    (rec, exit::OK)
}

fn table(n1: u32) -> Outcome {
    let rows = reproduce_table(n1)?;
    let ok = rows.iter().all(|r| r.matches());
    let rec = VerdictRecord::new(Query::Table, Subject::None)
        .input("n1", n1)
        .result("rows", &rows)
        .verdict(if ok { "ok" } else { "mismatch" });
    Ok((rec, if ok { exit::OK } else { exit::VERIFICATION_FAILED }))
}

fn write_csv(n1: u32, out: &mut dyn Write) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    for row in reproduce_table(n1)? {
        w.serialize(&row).map_err(Failure::io)?;
    }
    w.flush().map_err(Failure::io)
}

fn verify(suite: Suite, scope: u64, g: &Global, budget: &Budget) -> Outcome {
    let opts = SuiteOptions {
        rank: budget.rank_config(g.prime.field()?, g.seed, g.trials),
        scope,
    };
    let items = suites::run_suite(suite, &opts);
    let ok = items.iter().all(|i| i.passed);
    let mut rec = VerdictRecord::new(Query::Verify, Subject::Suite(suite.to_string()))
        .result("items", &items)
        .verdict(if ok { "pass" } else { "fail" });
    rec.prime = Some(opts.rank.field.modulus());
    rec.seed = Some(g.seed);
    rec.trials = Some(g.trials);
    Ok((rec, if ok { exit::OK } else { exit::VERIFICATION_FAILED }))
}

fn human(rec: &VerdictRecord, out: &mut dyn Write) -> std::io::Result<()> {
    let r = &rec.results;
    let text = |k: &str| r.get(k).map(|v| v.as_str().map(String::from).unwrap_or_else(|| v.to_string())).unwrap_or_default();
    match rec.query {
        Query::OscDim => {
            writeln!(out, "{}", text("dim"))?;
            if r.contains_key("jet_rank") {
                writeln!(out, "basis {}, jet rank {}: {}", text("basis_size"), text("jet_rank"), rec.verdict)?;
            }
        }
        Query::SecDim => writeln!(
            out,
            "dim {} (expected {}), cone rank {} of {}: {}",
            text("projective_dim"),
            text("expected_dim"),
            text("cone_rank"),
            text("expected_cone_rank"),
            rec.verdict
        )?,
        Query::Bound => {
            for k in ["h_main", "h_baseline", "h_asymptotic", "lambdas"] {
                writeln!(out, "{k:<13}{}", text(k))?;
            }
        }
        Query::Table => {
            let rows: Vec<segver::bounds::TableRow> = serde_json::from_value(r["rows"].clone())?;
            writeln!(out, "{:>3}  {:<28}{:>14}{:>14}", "d", "closed form", "value", "h_main")?;
            for row in rows {
                writeln!(out, "{:>3}  {:<28}{:>14}{:>14}", row.d, row.closed_form, row.value, row.h_main)?;
            }
        }
        Query::Verify => {
            let items: Vec<suites::SuiteItem> = serde_json::from_value(r["items"].clone())?;
            for i in items {
                writeln!(out, "{} {}: {}", if i.passed { "PASS" } else { "FAIL" }, i.name, i.detail)?;
            }
        }
    }
    Ok(())
}

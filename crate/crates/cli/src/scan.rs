use std::collections::BTreeMap;
use std::io::Write;
use std::sync::mpsc;
use std::time::Instant;

use clap::ValueEnum;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use segver::bounds::main_bound;
use segver::jets::{secant_rank_profile, segre_veronese_map, RankConfig};
use segver::{Error, Shape};

use crate::record::VerdictRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HMode {
    /// `h <= h_main + offset`; shapes with `d < 3` are skipped.
    Bound,
    /// `h` up to the first value whose expected span fills the ambient space.
    Range,
}

#[derive(Clone, Debug)]
pub struct ScanPlan {
    pub n_max: Vec<u32>,
    pub d_max: u32,
    pub h_mode: HMode,
    pub bound_offset: i64,
    pub jobs: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScanSummary {
    pub shapes: usize,
    pub records: usize,
    pub defect_suspected: usize,
    /// Defect suspected at `h` no larger than the bound in force.
    pub contradictions: usize,
    pub refused: usize,
}

/// Shapes with `len(n_max)` factors, `1 <= n_i <= n_max[i]` and total
/// degree at most `d_max`, up to reordering of factors.
pub fn scan_shapes(n_max: &[u32], d_max: u32) -> Vec<Shape> {
    let r = n_max.len();
    let mut out: BTreeMap<(Vec<u32>, Vec<u32>), Shape> = BTreeMap::new();
    let mut n = vec![1u32; r];
    let mut d = vec![1u32; r];
    fn rec(i: usize, n_max: &[u32], left: u32, n: &mut Vec<u32>, d: &mut Vec<u32>, out: &mut BTreeMap<(Vec<u32>, Vec<u32>), Shape>) {
        if i == n.len() {
            let s = Shape::new(n, d).expect("positive entries");
            out.entry((s.dims().to_vec(), s.degrees().to_vec())).or_insert(s);
            return;
        }
        let rest = (n.len() - i - 1) as u32;
        for ni in 1..=n_max[i] {
            for di in 1..=left.saturating_sub(rest) {
                n[i] = ni;
                d[i] = di;
                rec(i + 1, n_max, left - di, n, d, out);
            }
        }
    }
    if r > 0 && d_max >= r as u32 {
        rec(0, n_max, d_max, &mut n, &mut d, &mut out);
    }
    out.into_values().collect()
}

fn h_range(shape: &Shape, plan: &ScanPlan) -> Option<(u32, i64)> {
    let h_main = main_bound(shape).h_main.and_then(|h| h.to_i64());
    match plan.h_mode {
        HMode::Bound => {
            let bound = h_main? + plan.bound_offset;
            Some((bound.clamp(0, u32::MAX as i64) as u32, bound))
        }
        HMode::Range => {
            let n1 = shape.total_dim() as u128 + 1;
            let cols = shape.ambient_count().to_u128()?;
            let top = (cols.div_ceil(n1) as i64 + plan.bound_offset).clamp(0, u32::MAX as i64) as u32;
            Some((top, h_main.unwrap_or(0)))
        }
    }
}

fn scan_shape(shape: &Shape, plan: &ScanPlan, cfg: &RankConfig) -> Vec<VerdictRecord> {
    let Some((h_max, bound)) = h_range(shape, plan) else {
        return Vec::new();
    };
    let start = Instant::now();
    let profile = segre_veronese_map(shape, cfg.limits.max_cols).and_then(|m| secant_rank_profile(&m, h_max, cfg));
    let elapsed = start.elapsed().as_millis() as u64;
    match profile {
        Ok(verdicts) => verdicts
            .iter()
            .map(|r| {
                let mut rec = VerdictRecord::from_rank(shape, r).input("bound", bound);
                rec.wall_ms = elapsed;
                rec
            })
            .collect(),
        Err(e @ Error::ResourceLimit { .. }) => {
            let mut rec = VerdictRecord::new(crate::record::Query::SecDim, crate::record::Subject::Shape(shape.clone()))
                .input("h_max", h_max)
                .input("bound", bound)
                .result("error", e.to_string())
                .verdict("resource_refusal");
            rec.prime = Some(cfg.field.modulus());
            rec.seed = Some(cfg.seed);
            vec![rec]
        }
        Err(e) => {
            let rec = VerdictRecord::new(crate::record::Query::SecDim, crate::record::Subject::Shape(shape.clone()))
                .result("error", e.to_string())
                .verdict("error");
            vec![rec]
        }
    }
}

/// Runs the sweep, writing one JSON line per record in shape order. Each
/// line is flushed as soon as every earlier shape is done, so an
/// interrupted run leaves a valid prefix.
pub fn run_scan(plan: &ScanPlan, cfg: &RankConfig, out: &mut dyn Write) -> std::io::Result<ScanSummary> {
    let shapes = scan_shapes(&plan.n_max, plan.d_max);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs.max(1))
        .build()
        .map_err(std::io::Error::other)?;
    let mut summary = ScanSummary {
        shapes: shapes.len(),
        ..Default::default()
    };
    let (tx, rx) = mpsc::channel::<(usize, Vec<VerdictRecord>)>();
    std::thread::scope(|scope| -> std::io::Result<()> {
        let shapes = &shapes;
        scope.spawn(move || {
            pool.install(|| {
                shapes.par_iter().enumerate().for_each_with(tx, |tx, (i, s)| {
                    // the receiver only goes away when writing failed
                    let _ = tx.send((i, scan_shape(s, plan, cfg)));
                });
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, recs) in rx {
            pending.insert(i, recs);
            while let Some(recs) = pending.remove(&next) {
                for rec in recs {
                    summary.records += 1;
                    if rec.verdict == "resource_refusal" {
                        summary.refused += 1;
                    }
                    if rec.is_defect_suspected() {
                        summary.defect_suspected += 1;
                        let h = rec.inputs["h"].as_i64().unwrap_or(0);
                        let bound = rec.inputs["bound"].as_i64().unwrap_or(0);
                        if h <= bound {
                            summary.contradictions += 1;
                        }
                    }
                    serde_json::to_writer(&mut *out, &rec)?;
                    out.write_all(b"\n")?;
                }
                out.flush()?;
                next += 1;
            }
        }
        Ok(())
    })?;
    Ok(summary)
}

//! Curated checks run by `segver verify`.

use std::fmt;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use segver::bounds::{h_m, intro_form_bound, main_bound, reproduce_table};
use segver::certificates::{
    binomial_matrix, binomial_matrix_reversed, integer_determinant, m_regularity_certificate_with,
    strong2_certificate_with, SystemCache,
};
use segver::indices::shapes_up_to;
use segver::jets::{
    jet_rank_profile, scroll_map, secant_rank, segre_veronese_map, tangential_projection_fiber, PointSample,
    RankConfig, Verdict,
};
use segver::{PrimeField, Result, Shape};

/// `2^61 - 1`, the second modulus for cross-prime agreement.
pub const SECOND_PRIME: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Ah,
    Remarks,
    Scroll,
    Table,
    Regularity,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SuiteItem {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        SuiteItem {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: impl Into<String>, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => SuiteItem::new(name, passed, detail),
            Err(e) => SuiteItem::new(name, false, format!("error: {e}")),
        }
    }
}

/// Scope knobs for the suites.
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub rank: RankConfig,
    /// Largest `|Λ|` swept by the regularity suite.
    pub scope: u64,
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Vec<SuiteItem> {
    match suite {
        Suite::Ah => ah(&opts.rank),
        Suite::Remarks => remarks(&opts.rank),
        Suite::Scroll => scroll(&opts.rank),
        Suite::Table => table(),
        Suite::Regularity => regularity(opts.scope),
    }
}

/// `(d, n, h)` of the defective Veronese cases.
pub const AH_CASES: [(u32, u32, u32); 4] = [(4, 2, 5), (4, 3, 9), (3, 4, 7), (4, 4, 14)];

fn sec(shape: &Shape, h: u32, cfg: &RankConfig) -> Result<segver::jets::RankVerdict> {
    let map = segre_veronese_map(shape, cfg.limits.max_cols)?;
    secant_rank(&map, h, cfg)
}

fn ah(cfg: &RankConfig) -> Vec<SuiteItem> {
    let other = RankConfig {
        field: PrimeField::new(SECOND_PRIME).expect("Mersenne prime"),
        ..*cfg
    };
    let mut items = Vec::new();
    for (d, n, h) in AH_CASES {
        let shape = Shape::veronese(n, d).expect("valid");
        items.push(SuiteItem::from_result(format!("({d},{n},{h}) defective"), (|| {
            let a = sec(&shape, h, cfg)?;
            let b = sec(&shape, h, &other)?;
            let ok = a.verdict == Verdict::DefectSuspected && a.deficit() == 1 && a.cone_rank == b.cone_rank;
            Ok((
                ok,
                format!(
                    "cone rank {} of {} (p={}), {} (p={})",
                    a.cone_rank, a.expected_cone_rank, a.prime, b.cone_rank, b.prime
                ),
            ))
        })()));
        items.push(SuiteItem::from_result(format!("({d},{n},{}) control", h - 1), (|| {
            let r = sec(&shape, h - 1, cfg)?;
            Ok((
                r.verdict == Verdict::NotDefectiveCertified,
                format!("cone rank {} of {}", r.cone_rank, r.expected_cone_rank),
            ))
        })()));
    }
    items.push(SuiteItem::from_result("tangential fiber (4,2,4)", (|| {
        let map = segre_veronese_map(&Shape::veronese(2, 4)?, cfg.limits.max_cols)?;
        let fiber = tangential_projection_fiber(&map, 4, cfg)?;
        Ok((fiber == 1, format!("fiber dimension {fiber}")))
    })()));
    items
}

/// `(n, d, h)`: defective at `h`, certified at `h - 1`.
pub const REMARK_CASES: [(&[u32], &[u32], u32); 4] = [
    (&[1, 1], &[2, 2], 3),
    (&[1, 1, 1], &[1, 1, 2], 3),
    (&[1, 1, 1, 1], &[1, 1, 1, 1], 3),
    (&[2, 2, 2], &[1, 1, 1], 4),
];

fn remarks(cfg: &RankConfig) -> Vec<SuiteItem> {
    REMARK_CASES
        .iter()
        .map(|&(n, d, h)| {
            let shape = Shape::new(n, d).expect("valid");
            SuiteItem::from_result(format!("{shape} sharp at h={h}"), (|| {
                let bad = sec(&shape, h, cfg)?;
                let good = sec(&shape, h - 1, cfg)?;
                Ok((
                    bad.verdict == Verdict::DefectSuspected && good.verdict == Verdict::NotDefectiveCertified,
                    format!(
                        "h={}: {}/{}, h={h}: {}/{}",
                        h - 1,
                        good.cone_rank,
                        good.expected_cone_rank,
                        bad.cone_rank,
                        bad.expected_cone_rank
                    ),
                ))
            })())
        })
        .collect()
}

fn scroll(cfg: &RankConfig) -> Vec<SuiteItem> {
    let map = match scroll_map(&[1, 7]) {
        Ok(m) => m,
        Err(e) => return vec![SuiteItem::new("scroll (1,7)", false, format!("error: {e}"))],
    };
    let jet = SuiteItem::from_result("order-3 osculating dim 6", (|| {
        let point = PointSample::random(&map, &cfg.field, cfg.seed, 0, 0);
        let rank = *jet_rank_profile(&map, &cfg.field, &point, 3, &cfg.limits)?.last().expect("order 3");
        Ok((rank == 7, format!("jet rank {rank}, projective dim {}", rank - 1)))
    })());
    let sec3 = SuiteItem::from_result("sec_3 dim 7", (|| {
        let r = secant_rank(&map, 3, cfg)?;
        Ok((r.projective_dim == 7, format!("projective dim {}", r.projective_dim)))
    })());
    vec![jet, sec3]
}

fn table() -> Vec<SuiteItem> {
    let rows = SuiteItem::from_result("closed forms, n1 in 1..=50", (|| {
        let mut bad = Vec::new();
        for n1 in 1..=50 {
            for row in reproduce_table(n1)? {
                if !row.matches() {
                    bad.push(format!("n1={n1} d={}", row.d));
                }
            }
        }
        Ok((bad.is_empty(), if bad.is_empty() { "400 rows".into() } else { bad.join(", ") }))
    })());
    let intro = SuiteItem::from_result("expansion of d-1 vs h_m, 3 <= d <= 1000", (|| {
        let mut bad = 0;
        for n1 in 1..=50u32 {
            for d in 3..=1000u32 {
                let shape = Shape::new(&[n1, n1], &[1, d - 1])?;
                if main_bound(&shape).h_main != intro_form_bound(n1 as u64, d as u64) {
                    bad += 1;
                }
            }
        }
        Ok((bad == 0, format!("{bad} disagreements")))
    })());
    let hm = SuiteItem::from_result("h_m of pure powers", (|| {
        let ok = (2..=8u64).all(|m| (1..=20u32).all(|a| h_m(m, (1 << a) - 1).ok() == Some(m.pow(a - 1).into())));
        Ok((ok, String::new()))
    })());
    vec![rows, intro, hm]
}

fn regularity(scope: u64) -> Vec<SuiteItem> {
    let mut strong = (0usize, 0usize, 0usize, Vec::new());
    let mut mreg = (0usize, 0usize, 0usize, Vec::new());
    for shape in shapes_up_to(scope) {
        let d = shape.total_degree();
        let mut cache = SystemCache::new();
        for k1 in 0..d {
            for k2 in 0..d.saturating_sub(k1 + 1) {
                match strong2_certificate_with(&shape, k1, k2, scope as usize, &mut cache) {
                    Ok(b) if b.all_verified() => {
                        strong.0 += 1;
                        strong.1 += b.certificates.len();
                        strong.2 += b.ansatz_failures;
                    }
                    Ok(_) => strong.3.push(format!("{shape} k1={k1} k2={k2}")),
                    Err(e) => strong.3.push(format!("{shape} k1={k1} k2={k2}: {e}")),
                }
            }
        }
        for k in (0..d).take_while(|k| 2 * k + 1 < d) {
            match m_regularity_certificate_with(&shape, k, scope as usize, &mut cache) {
                Ok(b) if b.all_verified() => {
                    mreg.0 += 1;
                    mreg.1 += b.certificates.len();
                    mreg.2 += b.ansatz_failures;
                }
                Ok(_) => mreg.3.push(format!("{shape} k={k}")),
                Err(e) => mreg.3.push(format!("{shape} k={k}: {e}")),
            }
        }
    }
    let summary = |name: &str, (bundles, certs, fallbacks, bad): (usize, usize, usize, Vec<String>)| {
        let detail = if bad.is_empty() {
            format!("{bundles} bundles, {certs} certificates, {fallbacks} solved by the general system")
        } else {
            format!("{} failed: {}", bad.len(), bad.join("; "))
        };
        SuiteItem::new(format!("{name}, |Lambda| <= {scope}"), bad.is_empty(), detail)
    };
    let mut items = vec![summary("strong 2-regularity", strong), summary("m-regularity", mreg)];
    items.push(SuiteItem::from_result("binomial determinants", (|| {
        let (mut count, mut bad) = (0, 0);
        for_each_determinant_tuple(|sbar, s, d, k2| {
            let m = binomial_matrix(sbar, s, d, k2)?;
            let r = binomial_matrix_reversed(sbar, s, d, k2)?;
            let det = integer_determinant(&m);
            count += 1;
            if det == 0.into() || det != integer_determinant(&r) {
                bad += 1;
            }
            Ok(())
        })?;
        Ok((bad == 0, format!("{count} tuples, {bad} failures")))
    })()));
    items
}

/// Visits `(s̄, s, D, k2)` with `s̄ <= 8`, `2 <= D <= 20`, `D - k2 <= s <= D`
/// and matrix size `s - D + k2 + 1 <= 8`.
pub fn for_each_determinant_tuple(mut f: impl FnMut(u32, u32, u32, u32) -> Result<()>) -> Result<()> {
    for sbar in 0..=8 {
        for d in 2..=20 {
            for k2 in 0..=d - 2 {
                for s in d - k2..=d {
                    if s - (d - k2) < 8 {
                        f(sbar, s, d, k2)?;
                    }
                }
            }
        }
    }
    Ok(())
}

//! Combinatorial birationality witnesses for projections of a Veronese
//! variety from osculating spaces at several coordinate points.
//!
//! Centers sit at `e_0, ..., e_m` with orders `s_0, ..., s_m`. A coordinate
//! `J` survives iff it has at most `d - s_i - 1` entries equal to `i` for
//! every centered digit `i`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::indices::{FactorIndex, ProductIndex, Shape};
use crate::osculation::{projection_plan, OsculatingCenter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    Cremona,
    CoordinateSubsets,
    ConstantMap,
}

/// Which part of the lemma the parameters fall under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaCase {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c")]
    C,
}

/// A set of surviving coordinates sharing one monomial factor.
///
/// For [`WitnessKind::Cremona`] `subset` is `{0..n}` and row `k` omits
/// digit `k`; for [`WitnessKind::CoordinateSubsets`] row `k` starts with
/// `subset[k]`; for [`WitnessKind::ConstantMap`] the single row is the only
/// survivor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFamily {
    pub subset: Vec<u16>,
    pub rows: Vec<ProductIndex>,
    /// Exponent vector shared by every row after removing its own pattern.
    pub common: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CremonaWitness {
    pub n: u32,
    pub d: u32,
    pub orders: Vec<u32>,
    pub case: LemmaCase,
    pub kind: WitnessKind,
    pub families: Vec<WitnessFamily>,
}

/// Why no witness was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refusal {
    /// `"a"`, `"b"`, `"c"` when the parameters are in that case but the
    /// construction failed, otherwise `"outside lemma hypotheses"`.
    pub case: String,
    pub violated: String,
}

impl fmt::Display for Refusal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.case, self.violated)
    }
}

impl std::error::Error for Refusal {}

const OUTSIDE: &str = "outside lemma hypotheses";

fn refuse(case: &str, violated: String) -> Refusal {
    Refusal {
        case: case.to_string(),
        violated,
    }
}

fn row(mut digits: Vec<u16>) -> ProductIndex {
    digits.sort_unstable();
    ProductIndex(vec![FactorIndex(digits)])
}

fn exponents(idx: &ProductIndex, n: u32) -> Vec<u32> {
    let mut e = vec![0u32; n as usize + 1];
    for &x in idx.0[0].entries() {
        e[x as usize] += 1;
    }
    e
}

/// Builds the witness for centers `e_0..e_m` of `V^n_d` with the given
/// orders (`m = orders.len() - 1`).
pub fn cremona_witness(n: u32, d: u32, orders: &[u32]) -> Result<CremonaWitness, Refusal> {
    if n == 0 {
        return Err(refuse(OUTSIDE, "n >= 1".into()));
    }
    if d < 2 {
        return Err(refuse(OUTSIDE, format!("d >= 2 (d = {d})")));
    }
    if orders.is_empty() {
        return Err(refuse(OUTSIDE, "at least one center".into()));
    }
    let m = orders.len() as u32 - 1;
    if m > n {
        return Err(refuse(OUTSIDE, format!("m <= n ({} centers in P^{n})", m + 1)));
    }
    if let Some((j, &s)) = orders.iter().enumerate().find(|(_, &s)| s + 2 > d) {
        return Err(refuse(OUTSIDE, format!("s_{j} <= d - 2 (s_{j} = {s}, d = {d})")));
    }
    let total: u32 = orders.iter().sum();
    if n <= d {
        let nd = n * (d - 1);
        if total + 2 <= nd {
            return case_a(n, d, orders);
        }
        if total + 1 == nd {
            if m < 1 {
                return Err(refuse(OUTSIDE, "m >= 1 for a constant map (single center)".into()));
            }
            return case_b(n, d, orders);
        }
        return Err(refuse(
            OUTSIDE,
            format!(
                "s <= n(d-1) - 1 (s = {total}, n(d-1) - 2 = {}, n(d-1) - 1 = {})",
                nd as i64 - 2,
                nd as i64 - 1
            ),
        ));
    }
    if m != n || orders.iter().any(|&s| s != d - 2) {
        return Err(refuse(
            OUTSIDE,
            format!("n > d requires order d - 2 = {} at all {} points", d - 2, n + 1),
        ));
    }
    Ok(case_c(n, d))
}

fn case_a(n: u32, d: u32, orders: &[u32]) -> Result<CremonaWitness, Refusal> {
    // common padding of d - n digits, smallest digits first; a centered
    // digit i may appear at most d - s_i - 2 times in the padding
    let mut left = d - n;
    let mut common = vec![0u32; n as usize + 1];
    for i in 0..=n as usize {
        let cap = orders.get(i).map_or(left, |&s| d - s - 2);
        let take = cap.min(left);
        common[i] = take;
        left -= take;
    }
    if left > 0 {
        return Err(refuse("a", format!("no padding of {} digits fits the caps", d - n)));
    }
    let padding: Vec<u16> = common
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat(i as u16).take(c as usize))
        .collect();
    let rows = (0..=n as u16)
        .map(|k| {
            let mut digits: Vec<u16> = (0..=n as u16).filter(|&x| x != k).collect();
            digits.extend(&padding);
            row(digits)
        })
        .collect();
    Ok(CremonaWitness {
        n,
        d,
        orders: orders.to_vec(),
        case: LemmaCase::A,
        kind: WitnessKind::Cremona,
        families: vec![WitnessFamily {
            subset: (0..=n as u16).collect(),
            rows,
            common,
        }],
    })
}

fn case_b(n: u32, d: u32, orders: &[u32]) -> Result<CremonaWitness, Refusal> {
    let shape = Shape::veronese(n, d).map_err(|e| refuse("b", e.to_string()))?;
    let plan = projection_plan(&shape, &centers(orders)).map_err(|e| refuse("b", e.to_string()))?;
    if plan.surviving.len() != 1 {
        return Err(refuse(
            "b",
            format!("expected a single surviving coordinate, found {}", plan.surviving.len()),
        ));
    }
    let only = plan.surviving[0].clone();
    let common = exponents(&only, n);
    Ok(CremonaWitness {
        n,
        d,
        orders: orders.to_vec(),
        case: LemmaCase::B,
        kind: WitnessKind::ConstantMap,
        families: vec![WitnessFamily {
            subset: Vec::new(),
            rows: vec![only],
            common,
        }],
    })
}

fn case_c(n: u32, d: u32) -> CremonaWitness {
    let k = (n - d + 1) as usize;
    let mut families = Vec::new();
    let mut subset: Vec<u16> = (0..k as u16).collect();
    loop {
        let tail: Vec<u16> = (0..=n as u16).filter(|x| !subset.contains(x)).take(d as usize - 1).collect();
        let mut common = vec![0u32; n as usize + 1];
        for &t in &tail {
            common[t as usize] += 1;
        }
        let rows = subset
            .iter()
            .map(|&j| {
                let mut digits = tail.clone();
                digits.push(j);
                row(digits)
            })
            .collect();
        families.push(WitnessFamily {
            subset: subset.clone(),
            rows,
            common,
        });
        // next k-subset of {0..n} in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| (subset[i] as usize) < n as usize + 1 - k + i) else {
            break;
        };
        subset[i] += 1;
        for t in i + 1..k {
            subset[t] = subset[t - 1] + 1;
        }
    }
    CremonaWitness {
        n,
        d,
        orders: vec![d - 2; n as usize + 1],
        case: LemmaCase::C,
        kind: WitnessKind::CoordinateSubsets,
        families,
    }
}

fn centers(orders: &[u32]) -> Vec<OsculatingCenter> {
    orders
        .iter()
        .enumerate()
        .map(|(i, &s)| OsculatingCenter::new(vec![i as u16], s))
        .collect()
}

fn survives(idx: &ProductIndex, d: u32, orders: &[u32]) -> bool {
    orders
        .iter()
        .enumerate()
        .all(|(i, &s)| d - idx.0[0].count(i as u16) as u32 > s)
}

/// Re-checks a witness from scratch: every row survives, exponents follow
/// the Cremona (or coordinate) pattern up to the common vector, a constant
/// map has exactly one survivor, and subset families recover all ratios.
pub fn verify_witness(w: &CremonaWitness) -> Result<(), String> {
    let n = w.n;
    for fam in &w.families {
        for r in &fam.rows {
            if r.0.len() != 1 || r.0[0].entries().len() != w.d as usize {
                return Err(format!("row {r} has the wrong shape"));
            }
            if !survives(r, w.d, &w.orders) {
                return Err(format!("row {r} lies in the projection center"));
            }
        }
    }
    match w.kind {
        WitnessKind::Cremona => {
            let [fam] = w.families.as_slice() else {
                return Err("a Cremona witness has one family".into());
            };
            if fam.rows.len() != n as usize + 1 {
                return Err(format!("expected {} rows, found {}", n + 1, fam.rows.len()));
            }
            for (k, r) in fam.rows.iter().enumerate() {
                let e = exponents(r, n);
                let shifted: Vec<i64> = e
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x as i64 - if i == k { 0 } else { 1 })
                    .collect();
                let common: Vec<i64> = fam.common.iter().map(|&c| c as i64).collect();
                if shifted != common {
                    return Err(format!("row {k} = {r} is not x^common * prod_(i != {k}) x_i"));
                }
            }
        }
        WitnessKind::ConstantMap => {
            let shape = Shape::veronese(n, w.d).map_err(|e| e.to_string())?;
            let plan = projection_plan(&shape, &centers(&w.orders)).map_err(|e| e.to_string())?;
            if plan.surviving.len() != 1 || w.families.len() != 1 || plan.surviving != w.families[0].rows {
                return Err(format!("{} surviving coordinates", plan.surviving.len()));
            }
        }
        WitnessKind::CoordinateSubsets => {
            let mut covered = vec![false; n as usize + 1];
            for fam in &w.families {
                if fam.rows.len() != fam.subset.len() {
                    return Err("family size differs from its subset".into());
                }
                for (&j, r) in fam.subset.iter().zip(&fam.rows) {
                    let mut e = exponents(r, n);
                    if e[j as usize] == 0 {
                        return Err(format!("row {r} does not contain x_{j}"));
                    }
                    e[j as usize] -= 1;
                    if e != fam.common {
                        return Err(format!("row {r} is not x_{j} times the common monomial"));
                    }
                    covered[j as usize] = true;
                }
            }
            if let Some(i) = covered.iter().position(|c| !c) {
                return Err(format!("coordinate x_{i} is not recovered"));
            }
            for a in 0..=n as u16 {
                for b in a + 1..=n as u16 {
                    if !w.families.iter().any(|f| f.subset.contains(&a) && f.subset.contains(&b)) {
                        return Err(format!("ratio x_{a}/x_{b} is not recovered"));
                    }
                }
            }
        }
    }
    Ok(())
}

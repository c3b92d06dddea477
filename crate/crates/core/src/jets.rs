//! Monomial parametrizations, their jets at a point, and secant ranks by
//! Terracini's lemma, all over a prime field.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Fp, PrimeField};
use crate::indices::{for_each_factor_multiset, Shape};
use crate::linalg::{EchelonBasis, Matrix, SparseEchelon};

/// A block of source variables. Homogeneous blocks carry the common degree
/// of every monomial in them; affine blocks have no constraint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableGroup {
    pub len: usize,
    pub degree: Option<u32>,
}

/// Exponent matrix of a monomial map: one row per ambient coordinate, one
/// column per source variable. Stored by nonzero entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialMap {
    label: String,
    groups: Vec<VariableGroup>,
    nvars: usize,
    /// `(variable, exponent)` with exponent > 0, by variable within a row
    entries: Vec<(u32, u32)>,
    starts: Vec<usize>,
}

impl MonomialMap {
    pub fn new(label: impl Into<String>, groups: Vec<VariableGroup>, exponents: Vec<Vec<u32>>) -> Result<Self> {
        let nvars: usize = groups.iter().map(|g| g.len).sum();
        let mut entries = Vec::new();
        let mut starts = vec![0];
        for (r, row) in exponents.iter().enumerate() {
            if row.len() != nvars {
                return Err(Error::InvalidParameter(format!(
                    "row {r} has {} exponents, expected {nvars}",
                    row.len()
                )));
            }
            entries.extend(row.iter().enumerate().filter(|t| *t.1 > 0).map(|(v, &e)| (v as u32, e)));
            starts.push(entries.len());
        }
        Self::from_entries(label, groups, entries, starts)
    }

    fn from_entries(
        label: impl Into<String>,
        groups: Vec<VariableGroup>,
        entries: Vec<(u32, u32)>,
        starts: Vec<usize>,
    ) -> Result<Self> {
        let nvars: usize = groups.iter().map(|g| g.len).sum();
        if starts.len() < 2 || nvars == 0 {
            return Err(Error::InvalidParameter("empty monomial map".into()));
        }
        if groups.iter().any(|g| g.len == 0 || (g.degree.is_some() && g.len < 2)) {
            return Err(Error::InvalidParameter(
                "homogeneous groups need at least two variables, affine groups at least one".into(),
            ));
        }
        let mut group_of = Vec::with_capacity(nvars);
        for (g, grp) in groups.iter().enumerate() {
            group_of.extend(std::iter::repeat(g).take(grp.len));
        }
        let mut deg = vec![0u32; groups.len()];
        for (r, w) in starts.windows(2).enumerate() {
            deg.iter_mut().for_each(|x| *x = 0);
            for &(v, e) in &entries[w[0]..w[1]] {
                deg[group_of[v as usize]] += e;
            }
            for (g, grp) in groups.iter().enumerate() {
                if let Some(want) = grp.degree {
                    if deg[g] != want {
                        return Err(Error::InvalidParameter(format!(
                            "row {r} has degree {} in group {g}, expected {want}",
                            deg[g]
                        )));
                    }
                }
            }
        }
        Ok(MonomialMap {
            label: label.into(),
            groups,
            nvars,
            entries,
            starts,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn groups(&self) -> &[VariableGroup] {
        &self.groups
    }

    /// Number of ambient coordinates `N + 1`.
    pub fn rows(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Nonzero `(variable, exponent)` pairs of a row, by variable.
    pub fn row_entries(&self, row: usize) -> &[(u32, u32)] {
        &self.entries[self.starts[row]..self.starts[row + 1]]
    }

    pub fn exponents(&self, row: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.nvars];
        for &(v, e) in self.row_entries(row) {
            out[v as usize] = e;
        }
        out
    }

    /// Dimension `n` of the source.
    pub fn source_dim(&self) -> u32 {
        self.groups
            .iter()
            .map(|g| g.len as u32 - g.degree.is_some() as u32)
            .sum()
    }

    pub fn max_exponent(&self) -> u32 {
        self.entries.iter().map(|t| t.1).max().unwrap_or(0)
    }
}

/// Rows in the canonical order of `Λ`; row `I` counts how often each digit
/// occurs in each part.
pub fn segre_veronese_map(shape: &Shape, max_rows: usize) -> Result<MonomialMap> {
    let count = shape.ambient_count();
    let rows = match count.to_usize() {
        Some(c) if c <= max_rows => c,
        _ => {
            return Err(Error::resource(
                "N+1",
                count.to_u128().unwrap_or(u128::MAX),
                max_rows as u128,
            ))
        }
    };
    let groups: Vec<VariableGroup> = shape
        .dims()
        .iter()
        .zip(shape.degrees())
        .map(|(&n, &d)| VariableGroup {
            len: n as usize + 1,
            degree: Some(d),
        })
        .collect();
    // digit counts of every index of each factor, as global (variable, count)
    let mut offset = 0u32;
    let blocks: Vec<(Vec<(u32, u32)>, Vec<usize>)> = shape
        .dims()
        .iter()
        .zip(shape.degrees())
        .map(|(&n, &d)| {
            let mut flat: Vec<(u32, u32)> = Vec::new();
            let mut starts = vec![0];
            for_each_factor_multiset(n, d, |m| {
                flat.extend(m.iter().map(|&(x, k)| (offset + x as u32, k)));
                starts.push(flat.len());
            });
            offset += n + 1;
            (flat, starts)
        })
        .collect();
    let total_degree = shape.total_degree() as usize;
    let mut entries = Vec::with_capacity(rows * total_degree.min(8));
    let mut starts = Vec::with_capacity(rows + 1);
    starts.push(0);
    let mut pos = vec![0usize; blocks.len()];
    loop {
        for ((flat, st), &p) in blocks.iter().zip(&pos) {
            entries.extend_from_slice(&flat[st[p]..st[p + 1]]);
        }
        starts.push(entries.len());
        let mut i = blocks.len();
        loop {
            if i == 0 {
                return MonomialMap::from_entries(shape.to_string(), groups, entries, starts);
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] + 1 < blocks[i].1.len() {
                break;
            }
            pos[i] = 0;
        }
    }
}

/// Affine chart of the rational normal scroll `X_(a_1,...,a_k)`.
///
/// Variables are `u, α_2, ..., α_k`. Coordinates: `1`, then for each
/// `i >= 2` the block `α_i u^{a_i}, ..., α_i u, α_i`, then `u, ..., u^{a_1}`.
pub fn scroll_map(degrees: &[u32]) -> Result<MonomialMap> {
    if degrees.is_empty() || degrees.contains(&0) {
        return Err(Error::InvalidParameter("scroll degrees must be positive and nonempty".into()));
    }
    let k = degrees.len();
    let mut exponents = vec![vec![0u32; k]];
    for (i, &a) in degrees.iter().enumerate().skip(1) {
        for p in (0..=a).rev() {
            let mut row = vec![0u32; k];
            row[0] = p;
            row[i] = 1;
            exponents.push(row);
        }
    }
    for p in 1..=degrees[0] {
        let mut row = vec![0u32; k];
        row[0] = p;
        exponents.push(row);
    }
    let label = format!(
        "X_({})",
        degrees.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    );
    MonomialMap::new(label, vec![VariableGroup { len: 1, degree: None }; k], exponents)
}

/// A point of the source with its provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSample {
    /// Canonical residues, one per source variable.
    pub coordinates: Vec<u64>,
    pub prime: u64,
    pub seed: u64,
    pub trial: u64,
    pub draw: u64,
}

impl PointSample {
    /// A point given explicitly (provenance fields zero).
    pub fn fixed(field: &PrimeField, coordinates: Vec<u64>) -> Self {
        PointSample {
            coordinates: coordinates.into_iter().map(|v| v % field.modulus()).collect(),
            prime: field.modulus(),
            seed: 0,
            trial: 0,
            draw: 0,
        }
    }

    /// Uniform point; homogeneous groups are redrawn until nonzero. The
    /// stream is determined by `(seed, trial, draw)`.
    pub fn random(map: &MonomialMap, field: &PrimeField, seed: u64, trial: u64, draw: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial.wrapping_mul(1 << 32).wrapping_add(draw));
        let p = field.modulus();
        let mut coordinates = Vec::with_capacity(map.nvars());
        for g in map.groups() {
            loop {
                let block: Vec<u64> = (0..g.len).map(|_| rng.gen_range(0..p)).collect();
                if g.degree.is_none() || block.iter().any(|&x| x != 0) {
                    coordinates.extend(block);
                    break;
                }
            }
        }
        PointSample {
            coordinates,
            prime: p,
            seed,
            trial,
            draw,
        }
    }

    /// The coordinate point `e_I` of a Segre-Veronese map: in factor `i`
    /// only coordinate `corner[i]` is nonzero.
    pub fn corner(map: &MonomialMap, field: &PrimeField, corner: &[u16]) -> Result<Self> {
        if corner.len() != map.groups().len() {
            return Err(Error::ShapeMismatch);
        }
        let mut coordinates = Vec::with_capacity(map.nvars());
        for (g, &c) in map.groups().iter().zip(corner) {
            if c as usize >= g.len {
                return Err(Error::InvalidDigit {
                    digit: c,
                    max: g.len as u32 - 1,
                });
            }
            coordinates.extend((0..g.len).map(|i| (i == c as usize) as u64));
        }
        Ok(PointSample::fixed(field, coordinates))
    }
}

/// Size caps for rank computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_rows: usize,
    /// Column cap for dense elimination.
    pub max_cols: usize,
    /// Column cap when rows are sparse (coordinate points).
    pub max_sparse_cols: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_rows: 200_000,
            max_cols: 5_000,
            max_sparse_cols: 100_000,
        }
    }
}

fn check_prime(map: &MonomialMap, field: &PrimeField) -> Result<()> {
    let bound = map.max_exponent() as u64;
    if field.modulus() <= bound {
        return Err(Error::PrimeTooSmall {
            prime: field.modulus(),
            bound,
        });
    }
    Ok(())
}

/// Columns sharing their exponents on the zero affine variables. A
/// derivative `∂^β` can only be nonzero on the run whose key equals β
/// there.
struct Run {
    start: usize,
    end: usize,
    /// sum of the key
    order: u32,
}

/// Jet data of a map at one point in an affine chart.
struct Chart<'a> {
    f: &'a PrimeField,
    cols: usize,
    /// number of affine variables
    a: usize,
    /// nonzero affine exponents `(variable, e)` of column `c` are
    /// `exps[starts[c]..starts[c + 1]]`, by variable
    exps: Vec<(u32, u32)>,
    starts: Vec<usize>,
    /// the entries of each column on zero variables, laid out the same way
    keys: Vec<(u32, u32)>,
    key_starts: Vec<usize>,
    pow: Vec<Vec<Fp>>,
    fact: Vec<Fp>,
    inv_fact: Vec<Fp>,
    zero_vars: Vec<usize>,
    free_vars: Vec<usize>,
    /// columns sorted by key, cut into runs
    members: Vec<usize>,
    runs: Vec<Run>,
    runs_by_order: Vec<Vec<usize>>,
    var_cap: Vec<u32>,
    var_group: Vec<usize>,
    group_cap: Vec<u32>,
    /// sum of `var_cap` over the later variables of the same group
    group_rest: Vec<u32>,
    /// largest order the groups after this variable's can absorb
    after_group: Vec<u32>,
}

impl<'a> Chart<'a> {
    fn new(map: &MonomialMap, f: &'a PrimeField, point: &PointSample) -> Result<Self> {
        check_prime(map, f)?;
        if point.coordinates.len() != map.nvars() {
            return Err(Error::InvalidParameter(format!(
                "point has {} coordinates, map has {} variables",
                point.coordinates.len(),
                map.nvars()
            )));
        }
        if point.prime != f.modulus() {
            return Err(Error::InvalidParameter("point was sampled over another prime".into()));
        }
        let x: Vec<Fp> = point.coordinates.iter().map(|&v| f.from_u64(v)).collect();
        // affine variables: (source column, value, group)
        let mut affine: Vec<(usize, Fp, usize)> = Vec::new();
        let mut start = 0;
        for (g, grp) in map.groups().iter().enumerate() {
            let block = &x[start..start + grp.len];
            match grp.degree {
                None => affine.extend(block.iter().enumerate().map(|(i, &v)| (start + i, v, g))),
                Some(_) => {
                    let c = block.iter().position(|v| !f.is_zero(v)).ok_or_else(|| {
                        Error::InvalidParameter(format!("point is zero on homogeneous group {g}"))
                    })?;
                    let inv = f.inv(&block[c]).expect("nonzero");
                    for (i, v) in block.iter().enumerate() {
                        if i != c {
                            affine.push((start + i, f.mul(v, &inv), g));
                        }
                    }
                }
            }
            start += grp.len;
        }
        let a = affine.len();
        let cols = map.rows();
        let mut affine_of = vec![u32::MAX; map.nvars()];
        for (i, t) in affine.iter().enumerate() {
            affine_of[t.0] = i as u32;
        }
        let mut exps = Vec::new();
        let mut starts = Vec::with_capacity(cols + 1);
        starts.push(0);
        for r in 0..cols {
            for &(v, e) in map.row_entries(r) {
                if affine_of[v as usize] != u32::MAX {
                    exps.push((affine_of[v as usize], e));
                }
            }
            starts.push(exps.len());
        }
        let max_e = map.max_exponent() as usize;
        let y: Vec<Fp> = affine.iter().map(|t| t.1).collect();
        let pow = y
            .iter()
            .map(|v| {
                let mut p = vec![f.one(); max_e + 1];
                for e in 1..=max_e {
                    p[e] = f.mul(&p[e - 1], v);
                }
                p
            })
            .collect();
        // p > max_e, so every factorial here is invertible
        let mut fact = vec![f.one(); max_e + 1];
        for e in 1..=max_e {
            fact[e] = f.mul(&fact[e - 1], &f.from_u64(e as u64));
        }
        let mut inv_fact = vec![f.one(); max_e + 1];
        inv_fact[max_e] = f.inv(&fact[max_e]).expect("p > max exponent");
        for e in (1..=max_e).rev() {
            inv_fact[e - 1] = f.mul(&inv_fact[e], &f.from_u64(e as u64));
        }
        let (zero_vars, free_vars): (Vec<usize>, Vec<usize>) = (0..a).partition(|&v| f.is_zero(&y[v]));
        let mut keys: Vec<(u32, u32)> = Vec::new();
        let mut key_starts = Vec::with_capacity(cols + 1);
        key_starts.push(0);
        for c in 0..cols {
            keys.extend(exps[starts[c]..starts[c + 1]].iter().filter(|t| f.is_zero(&y[t.0 as usize])));
            key_starts.push(keys.len());
        }
        let key = |c: usize| &keys[key_starts[c]..key_starts[c + 1]];
        // group columns by key, runs in order of first appearance
        let mut run_of_key: FxHashMap<&[(u32, u32)], usize> = FxHashMap::default();
        let mut run_id = Vec::with_capacity(cols);
        let mut sizes: Vec<usize> = Vec::new();
        for c in 0..cols {
            let id = *run_of_key.entry(key(c)).or_insert(sizes.len());
            if id == sizes.len() {
                sizes.push(0);
            }
            sizes[id] += 1;
            run_id.push(id);
        }
        let mut runs: Vec<Run> = Vec::with_capacity(sizes.len());
        let mut next = 0;
        for &n in &sizes {
            runs.push(Run {
                start: next,
                end: next,
                order: 0,
            });
            next += n;
        }
        let mut members = vec![0usize; cols];
        for c in 0..cols {
            let r = &mut runs[run_id[c]];
            if r.start == r.end {
                r.order = key(c).iter().map(|t| t.1).sum();
            }
            members[r.end] = c;
            r.end += 1;
        }
        let top = runs.iter().map(|r| r.order).max().unwrap_or(0) as usize;
        let mut runs_by_order = vec![Vec::new(); top + 1];
        for (i, r) in runs.iter().enumerate() {
            runs_by_order[r.order as usize].push(i);
        }
        let var_group: Vec<usize> = affine.iter().map(|t| t.2).collect();
        let ngroups = map.groups().len();
        let mut var_cap = vec![0u32; a];
        let mut group_cap = vec![0u32; ngroups];
        let mut gsum = vec![0u32; ngroups];
        for c in 0..cols {
            gsum.iter_mut().for_each(|s| *s = 0);
            for &(v, e) in &exps[starts[c]..starts[c + 1]] {
                let v = v as usize;
                var_cap[v] = var_cap[v].max(e);
                gsum[var_group[v]] += e;
            }
            for g in 0..ngroups {
                group_cap[g] = group_cap[g].max(gsum[g]);
            }
        }
        // affine variables of a group are contiguous
        let mut group_rest = vec![0u32; a];
        let mut after_group = vec![0u32; a];
        let (mut rest, mut after, mut open) = (0u32, 0u32, None);
        for v in (0..a).rev() {
            let g = var_group[v];
            if open != Some(g) {
                if let Some(h) = open {
                    after += rest.min(group_cap[h]);
                }
                rest = 0;
                open = Some(g);
            }
            group_rest[v] = rest;
            after_group[v] = after;
            rest += var_cap[v];
        }
        Ok(Chart {
            f,
            cols,
            a,
            exps,
            starts,
            keys,
            key_starts,
            pow,
            fact,
            inv_fact,
            zero_vars,
            free_vars,
            members,
            runs,
            runs_by_order,
            var_cap,
            var_group,
            group_cap,
            group_rest,
            after_group,
        })
    }

    fn is_dense(&self) -> bool {
        self.zero_vars.is_empty()
    }

    fn col(&self, c: usize) -> &[(u32, u32)] {
        &self.exps[self.starts[c]..self.starts[c + 1]]
    }

    fn key(&self, c: usize) -> &[(u32, u32)] {
        &self.keys[self.key_starts[c]..self.key_starts[c + 1]]
    }

    fn run_of(&self, beta: &[u32]) -> Option<&Run> {
        let want = self.zero_vars.iter().filter(|&&v| beta[v] > 0).map(|&v| (v as u32, beta[v]));
        self.runs
            .iter()
            .find(|r| self.key(self.members[r.start]).iter().copied().eq(want.clone()))
    }

    /// Nonzero entries of `∂^β φ` at the point.
    fn row(&self, beta: &[u32]) -> Vec<(usize, Fp)> {
        match self.run_of(beta) {
            Some(run) => self.row_on(run, beta, beta.iter().sum()),
            None => Vec::new(),
        }
    }

    /// `∂^β φ` restricted to the columns of `run`, sorted by column; `t = |β|`.
    fn row_on(&self, run: &Run, beta: &[u32], t: u32) -> Vec<(usize, Fp)> {
        let f = self.f;
        let mut out = Vec::with_capacity(run.end - run.start);
        'col: for &c in &self.members[run.start..run.end] {
            let mut acc = f.one();
            // β must live on the support of the column
            let mut used = 0;
            for &(v, ev) in self.col(c) {
                let (v, ev, bv) = (v as usize, ev as usize, beta[v as usize] as usize);
                if ev < bv {
                    continue 'col;
                }
                used += bv as u32;
                if bv > 0 {
                    // e! / (e - b)!
                    acc = f.mul(&acc, &f.mul(&self.fact[ev], &self.inv_fact[ev - bv]));
                }
                if ev > bv {
                    acc = f.mul(&acc, &self.pow[v][ev - bv]);
                }
            }
            if used == t && !f.is_zero(&acc) {
                out.push((c, acc));
            }
        }
        out.sort_unstable_by_key(|t| t.0);
        out
    }

    /// Calls `visit` on every multi-index of total order `t` that is not
    /// excluded by the per-variable and per-group caps.
    fn for_each_beta(&self, t: u32, visit: &mut dyn FnMut(&[u32])) {
        fn rec(ch: &Chart, v: usize, left: u32, gleft: &mut Vec<u32>, beta: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
            if v == ch.a {
                if left == 0 {
                    visit(beta);
                }
                return;
            }
            let g = ch.var_group[v];
            let hi = left.min(ch.var_cap[v]).min(gleft[g]);
            for x in (0..=hi).rev() {
                // what the remaining variables can still take; once short, smaller x is shorter still
                if left - x > (gleft[g] - x).min(ch.group_rest[v]) + ch.after_group[v] {
                    break;
                }
                beta[v] = x;
                gleft[g] -= x;
                rec(ch, v + 1, left - x, gleft, beta, visit);
                gleft[g] += x;
            }
            beta[v] = 0;
        }
        let mut gleft = self.group_cap.clone();
        let mut beta = vec![0u32; self.a];
        rec(self, 0, t, &mut gleft, &mut beta, visit);
    }

    /// Calls `visit(run, β)` on every multi-index of order `t` that can be
    /// nonzero: β equals a run key on the zero variables and is free on the
    /// others.
    fn for_each_sparse_beta(&self, t: u32, visit: &mut dyn FnMut(&Run, &[u32])) {
        let mut prev: Vec<u32> = Vec::new();
        let caps: Vec<u32> = self.free_vars.iter().map(|&v| self.var_cap[v]).collect();
        let mut beta = vec![0u32; self.a];
        // with no free variables only keys of order exactly t contribute
        let hi = (t as usize).min(self.runs_by_order.len() - 1);
        let lo = if self.free_vars.is_empty() { t as usize } else { 0 };
        for run in self.runs_by_order[lo.min(hi + 1)..=hi]
            .iter()
            .flatten()
            .map(|&i| &self.runs[i])
        {
            for v in prev.drain(..) {
                beta[v as usize] = 0;
            }
            for &(v, e) in self.key(self.members[run.start]) {
                beta[v as usize] = e;
                prev.push(v);
            }
            if caps.is_empty() {
                visit(run, &beta);
                continue;
            }
            crate::indices::for_each_composition(t - run.order, &caps, |free| {
                for (&v, &x) in self.free_vars.iter().zip(free) {
                    beta[v] = x;
                }
                visit(run, &beta);
            });
        }
    }

    fn dense(&self, entries: &[(usize, Fp)]) -> Vec<Fp> {
        let mut row = vec![self.f.zero(); self.cols];
        for &(c, v) in entries {
            row[c] = v;
        }
        row
    }
}

/// All partial derivatives of order `<= order` at the point, one row each
/// (orders ascending). Multi-indices ruled out by the exponent caps give
/// identically zero rows and are left out.
pub fn jet_matrix(map: &MonomialMap, field: &PrimeField, point: &PointSample, order: u32, limits: &Limits) -> Result<Matrix<Fp>> {
    let chart = Chart::new(map, field, point)?;
    if chart.cols > limits.max_cols {
        return Err(Error::resource("columns", chart.cols as u128, limits.max_cols as u128));
    }
    let mut rows = Vec::new();
    let mut err = None;
    for t in 0..=order {
        chart.for_each_beta(t, &mut |beta| {
            if err.is_some() {
                return;
            }
            if rows.len() == limits.max_rows {
                err = Some(Error::resource("jet rows", rows.len() as u128 + 1, limits.max_rows as u128));
                return;
            }
            rows.push(chart.dense(&chart.row(beta)));
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    Matrix::from_rows(rows)
}

/// Rank of the order-`s` jet for every `s` in `0..=max_order`, built
/// incrementally. Sparse elimination is used when the point has zero affine
/// coordinates (coordinate points give one nonzero per row).
pub fn jet_rank_profile(
    map: &MonomialMap,
    field: &PrimeField,
    point: &PointSample,
    max_order: u32,
    limits: &Limits,
) -> Result<Vec<usize>> {
    let chart = Chart::new(map, field, point)?;
    let dense = chart.is_dense();
    let col_cap = if dense { limits.max_cols } else { limits.max_sparse_cols };
    if chart.cols > col_cap {
        return Err(Error::resource("columns", chart.cols as u128, col_cap as u128));
    }
    let mut sparse = SparseEchelon::new(*field);
    let mut basis = EchelonBasis::new(*field, chart.cols);
    let mut rows_seen = 0usize;
    let mut err = None;
    let mut profile = Vec::with_capacity(max_order as usize + 1);
    for t in 0..=max_order {
        if dense && !basis.is_full() {
            chart.for_each_beta(t, &mut |beta| {
                if err.is_some() || basis.is_full() {
                    return;
                }
                rows_seen += 1;
                if rows_seen > limits.max_rows {
                    err = Some(Error::resource("jet rows", rows_seen as u128, limits.max_rows as u128));
                    return;
                }
                basis.insert(chart.dense(&chart.row(beta)));
            });
        } else if !dense && sparse.rank() < chart.cols {
            chart.for_each_sparse_beta(t, &mut |run, beta| {
                if err.is_some() {
                    return;
                }
                rows_seen += 1;
                if rows_seen > limits.max_rows {
                    err = Some(Error::resource("jet rows", rows_seen as u128, limits.max_rows as u128));
                    return;
                }
                let entries = chart.row_on(run, beta, t);
                if !entries.is_empty() {
                    sparse.insert(entries);
                }
            });
        }
        if let Some(e) = err.take() {
            return Err(e);
        }
        profile.push(if dense { basis.rank() } else { sparse.rank() });
    }
    Ok(profile)
}

/// The point row followed by the first partials in the chart variables.
fn first_order_rows(chart: &Chart) -> Vec<Vec<Fp>> {
    let mut beta = vec![0u32; chart.a];
    let mut rows = vec![chart.dense(&chart.row(&beta))];
    for v in 0..chart.a {
        if chart.var_cap[v] == 0 {
            continue;
        }
        beta[v] = 1;
        rows.push(chart.dense(&chart.row(&beta)));
        beta[v] = 0;
    }
    rows
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotDefectiveCertified,
    DefectSuspected,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotDefectiveCertified => "not_defective_certified",
            Verdict::DefectSuspected => "defect_suspected",
        }
    }
}

/// Outcome of a Terracini rank computation for `sec_h`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVerdict {
    pub map: String,
    pub h: u32,
    pub cone_rank: usize,
    pub expected_cone_rank: usize,
    pub projective_dim: usize,
    pub verdict: Verdict,
    pub trials: u32,
    pub prime: u64,
    pub seed: u64,
}

impl RankVerdict {
    pub fn deficit(&self) -> usize {
        self.expected_cone_rank - self.cone_rank
    }
}

/// Field, seed and effort for randomized rank computations.
#[derive(Clone, Copy, Debug)]
pub struct RankConfig {
    pub field: PrimeField,
    pub seed: u64,
    pub trials: u32,
    pub limits: Limits,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            field: PrimeField::default_field(),
            seed: 0,
            trials: 2,
            limits: Limits::default(),
        }
    }
}

fn expected_cone_rank(map: &MonomialMap, h: u32) -> usize {
    ((h as usize) * (map.source_dim() as usize + 1)).min(map.rows())
}

fn check_secant_size(map: &MonomialMap, h_max: u32, limits: &Limits) -> Result<()> {
    let cols = map.rows();
    if cols > limits.max_cols {
        return Err(Error::resource("N+1", cols as u128, limits.max_cols as u128));
    }
    let rows = (h_max as u128) * (map.source_dim() as u128 + 1);
    let needed = rows.min(cols as u128 + map.source_dim() as u128 + 1);
    if needed > limits.max_rows as u128 {
        return Err(Error::resource("h(n+1)", rows, limits.max_rows as u128));
    }
    Ok(())
}

/// Cone ranks after adding points `0..h_max` of one trial; stops early once
/// the rank is `N + 1`.
fn one_trial(map: &MonomialMap, cfg: &RankConfig, trial: u64, h_max: u32) -> Result<Vec<usize>> {
    let f = &cfg.field;
    let mut basis = EchelonBasis::new(*f, map.rows());
    let mut ranks = Vec::with_capacity(h_max as usize);
    for i in 0..h_max {
        if basis.is_full() {
            ranks.push(basis.rank());
            continue;
        }
        let point = PointSample::random(map, f, cfg.seed, trial, i as u64);
        let chart = Chart::new(map, f, &point)?;
        for row in first_order_rows(&chart) {
            if basis.is_full() {
                break;
            }
            basis.insert(row);
        }
        ranks.push(basis.rank());
    }
    Ok(ranks)
}

/// Verdicts for `h = 1..=h_max` from incremental eliminations. Trials are
/// repeated only while some `h` is still deficient; the best rank per `h`
/// is kept.
pub fn secant_rank_profile(map: &MonomialMap, h_max: u32, cfg: &RankConfig) -> Result<Vec<RankVerdict>> {
    if h_max == 0 {
        return Ok(Vec::new());
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    check_prime(map, &cfg.field)?;
    check_secant_size(map, h_max, &cfg.limits)?;
    let expected: Vec<usize> = (1..=h_max).map(|h| expected_cone_rank(map, h)).collect();
    let mut best = vec![0usize; h_max as usize];
    let mut trials_run = 0;
    for trial in 0..cfg.trials {
        let Some(last_deficient) = (0..h_max as usize).rev().find(|&i| best[i] < expected[i]) else {
            break;
        };
        trials_run += 1;
        let ranks = one_trial(map, cfg, trial as u64, last_deficient as u32 + 1)?;
        for (b, r) in best.iter_mut().zip(ranks) {
            *b = (*b).max(r);
        }
    }
    Ok((0..h_max as usize)
        .map(|i| RankVerdict {
            map: map.label().to_string(),
            h: i as u32 + 1,
            cone_rank: best[i],
            expected_cone_rank: expected[i],
            projective_dim: best[i] - 1,
            verdict: if best[i] == expected[i] {
                Verdict::NotDefectiveCertified
            } else {
                Verdict::DefectSuspected
            },
            trials: trials_run,
            prime: cfg.field.modulus(),
            seed: cfg.seed,
        })
        .collect())
}

/// Verdict for a single `h`.
pub fn secant_rank(map: &MonomialMap, h: u32, cfg: &RankConfig) -> Result<RankVerdict> {
    if h == 0 {
        return Err(Error::InvalidParameter("h must be at least 1".into()));
    }
    Ok(secant_rank_profile(map, h, cfg)?.pop().expect("h >= 1"))
}

/// Generic fiber dimension of the projection from the span of `h` tangent
/// spaces: `(n + 1) - (rank_{h+1} - rank_h)`, zero iff generically finite.
pub fn tangential_projection_fiber(map: &MonomialMap, h: u32, cfg: &RankConfig) -> Result<u32> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    check_prime(map, &cfg.field)?;
    check_secant_size(map, h + 1, &cfg.limits)?;
    let n1 = map.source_dim() as usize + 1;
    let (mut best_h, mut best_next) = (0usize, 0usize);
    for trial in 0..cfg.trials {
        let ranks = one_trial(map, cfg, trial as u64, h + 1)?;
        let rh = if h == 0 { 0 } else { ranks[h as usize - 1] };
        best_h = best_h.max(rh);
        best_next = best_next.max(ranks[h as usize]);
    }
    let cols = map.rows();
    if cols < best_h + n1 {
        return Err(Error::HypothesisViolated(format!(
            "N - dim<T_1..T_h> - 1 >= n fails: N = {}, dim = {}, n = {}",
            cols - 1,
            best_h as i64 - 1,
            n1 - 1
        )));
    }
    Ok((n1 - (best_next - best_h)) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rank;

    fn f() -> PrimeField {
        PrimeField::default_field()
    }

    #[test]
    fn conic_and_segre_rows() {
        let m = segre_veronese_map(&Shape::veronese(1, 2).unwrap(), 100).unwrap();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.exponents(0), &[2, 0]);
        assert_eq!(m.exponents(1), &[1, 1]);
        assert_eq!(m.exponents(2), &[0, 2]);
        let s = segre_veronese_map(&Shape::new(&[1, 1], &[1, 1]).unwrap(), 100).unwrap();
        assert_eq!(s.rows(), 4);
        assert_eq!(s.exponents(1), &[1, 0, 0, 1]);
        assert_eq!(s.source_dim(), 2);
        assert!(segre_veronese_map(&Shape::veronese(3, 3).unwrap(), 19).is_err());
    }

    #[test]
    fn scroll_chart() {
        let m = scroll_map(&[1, 7]).unwrap();
        assert_eq!(m.rows(), 10);
        assert_eq!(m.exponents(0), &[0, 0]);
        assert_eq!(m.exponents(1), &[7, 1]);
        assert_eq!(m.exponents(8), &[0, 1]);
        assert_eq!(m.exponents(9), &[1, 0]);
        assert_eq!(scroll_map(&[1]).unwrap().rows(), 2);
        assert_eq!(scroll_map(&[1, 1]).unwrap().rows(), 4);
        assert!(scroll_map(&[]).is_err());
    }

    #[test]
    fn homogeneity_is_enforced() {
        let g = vec![VariableGroup { len: 2, degree: Some(2) }];
        assert!(MonomialMap::new("bad", g, vec![vec![1, 0]]).is_err());
    }

    #[test]
    fn order_zero_jet_has_rank_one() {
        let m = segre_veronese_map(&Shape::new(&[2, 1], &[2, 3]).unwrap(), 1000).unwrap();
        let p = PointSample::random(&m, &f(), 5, 0, 0);
        let j = jet_matrix(&m, &f(), &p, 0, &Limits::default()).unwrap();
        assert_eq!(j.nrows(), 1);
        assert_eq!(rank(&f(), &j), 1);
    }

    #[test]
    fn sparse_and_dense_profiles_agree_at_corners() {
        let shape = Shape::new(&[1, 2], &[2, 2]).unwrap();
        let m = segre_veronese_map(&shape, 1000).unwrap();
        let p = PointSample::corner(&m, &f(), &[1, 0]).unwrap();
        let prof = jet_rank_profile(&m, &f(), &p, 4, &Limits::default()).unwrap();
        let dense: Vec<usize> = (0..=4)
            .map(|s| rank(&f(), &jet_matrix(&m, &f(), &p, s, &Limits::default()).unwrap()))
            .collect();
        assert_eq!(prof, dense);
        assert_eq!(prof, vec![1, 4, 10, 15, 18]);
    }

    #[test]
    fn sparse_profile_with_free_variables() {
        // some chart coordinates zero, some not
        let shape = Shape::new(&[2, 3], &[3, 2]).unwrap();
        let m = segre_veronese_map(&shape, 1000).unwrap();
        for coords in [vec![1, 0, 5, 0, 1, 0, 0], vec![0, 3, 0, 2, 0, 7, 1], vec![4, 1, 0, 1, 0, 0, 0]] {
            let p = PointSample::fixed(&f(), coords);
            let prof = jet_rank_profile(&m, &f(), &p, 5, &Limits::default()).unwrap();
            let dense: Vec<usize> = (0..=5)
                .map(|s| rank(&f(), &jet_matrix(&m, &f(), &p, s, &Limits::default()).unwrap()))
                .collect();
            assert_eq!(prof, dense);
        }
        let scroll = scroll_map(&[3, 2]).unwrap();
        let p = PointSample::fixed(&f(), vec![0, 2]);
        let prof = jet_rank_profile(&scroll, &f(), &p, 4, &Limits::default()).unwrap();
        let dense: Vec<usize> = (0..=4)
            .map(|s| rank(&f(), &jet_matrix(&scroll, &f(), &p, s, &Limits::default()).unwrap()))
            .collect();
        assert_eq!(prof, dense);
    }

    #[test]
    fn small_prime_is_refused() {
        let m = segre_veronese_map(&Shape::veronese(1, 7).unwrap(), 100).unwrap();
        let small = PrimeField::new(7).unwrap();
        let p = PointSample::fixed(&small, vec![1, 2]);
        assert_eq!(
            jet_matrix(&m, &small, &p, 1, &Limits::default()).unwrap_err(),
            Error::PrimeTooSmall { prime: 7, bound: 7 }
        );
    }

    #[test]
    fn one_point_spans_the_tangent_cone() {
        let m = segre_veronese_map(&Shape::new(&[1, 2], &[1, 2]).unwrap(), 1000).unwrap();
        let v = secant_rank(&m, 1, &RankConfig::default()).unwrap();
        assert_eq!(v.cone_rank, 4);
        assert_eq!(v.projective_dim, 3);
        assert_eq!(v.verdict, Verdict::NotDefectiveCertified);
    }

    #[test]
    fn quartic_surface_is_five_defective() {
        let m = segre_veronese_map(&Shape::veronese(2, 4).unwrap(), 1000).unwrap();
        let v = secant_rank(&m, 5, &RankConfig::default()).unwrap();
        assert_eq!((v.cone_rank, v.expected_cone_rank, v.projective_dim), (14, 15, 13));
        assert_eq!(v.verdict, Verdict::DefectSuspected);
        assert_eq!(v.trials, 2);
        assert_eq!(tangential_projection_fiber(&m, 4, &RankConfig::default()).unwrap(), 1);
        assert_eq!(tangential_projection_fiber(&m, 3, &RankConfig::default()).unwrap(), 0);
        assert_eq!(tangential_projection_fiber(&m, 0, &RankConfig::default()).unwrap(), 0);
        assert!(matches!(
            tangential_projection_fiber(&m, 5, &RankConfig::default()),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn scroll_example() {
        let m = scroll_map(&[1, 7]).unwrap();
        let p = PointSample::random(&m, &f(), 11, 0, 0);
        let prof = jet_rank_profile(&m, &f(), &p, 3, &Limits::default()).unwrap();
        // besides the three vanishing partials, phi_uu = alpha * phi_uua
        // because the line part is linear in u
        assert_eq!(prof, vec![1, 3, 5, 6]);
        let v = secant_rank(&m, 3, &RankConfig::default()).unwrap();
        assert_eq!(v.projective_dim, 7);
    }

    #[test]
    fn point_sampling_is_deterministic() {
        let m = segre_veronese_map(&Shape::new(&[1, 1], &[1, 1]).unwrap(), 100).unwrap();
        let a = PointSample::random(&m, &f(), 9, 1, 2);
        let b = PointSample::random(&m, &f(), 9, 1, 2);
        let c = PointSample::random(&m, &f(), 9, 1, 3);
        assert_eq!(a, b);
        assert_ne!(a.coordinates, c.coordinates);
    }
}

//! QUBO encoding of the square-weighted stump objective.
//!
//! Variable blocks, in index order:
//!
//! | block | meaning                                                   | count        |
//! |-------|-----------------------------------------------------------|--------------|
//! | θ_F   | column `j` is a producted fingerprint                     | `n_f`        |
//! | θ_X   | sample `i` misses exactly `c` producted columns (one-hot) | `n_s·(m+1)`  |
//! | θ_U   | exactly `u` columns are selected (one-hot slack, 1..=m)   | `m`          |
//!
//! Coefficients are stored in minimization form: `energy = offset + Σ b_l θ_l
//! + Σ_{l<m} Q_lm θ_l θ_m`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stump::{self, FingerprintSet};

/// Floor on the target variance used when scaling penalties.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub n_f: usize,
    pub n_s: usize,
    pub m: usize,
    pub total: usize,
}

impl VariableLayout {
    pub fn new(n_f: usize, n_s: usize, m: usize) -> Self {
        Self {
            n_f,
            n_s,
            m,
            total: n_f + n_s * (m + 1) + m,
        }
    }

    pub fn fingerprint(&self, j: usize) -> usize {
        debug_assert!(j < self.n_f);
        j
    }

    pub fn unsatisfied(&self, i: usize, c: usize) -> usize {
        debug_assert!(i < self.n_s && c <= self.m);
        self.n_f + i * (self.m + 1) + c
    }

    /// Slack bit for `Σ θ_F = u`, `1 <= u <= m`.
    pub fn slack(&self, u: usize) -> usize {
        debug_assert!((1..=self.m).contains(&u));
        self.n_f + self.n_s * (self.m + 1) + (u - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl PenaltyWeights {
    pub fn uniform(lambda: f64) -> Self {
        Self {
            lambda1: lambda,
            lambda2: lambda,
            lambda3: lambda,
        }
    }

    /// `2 · N_S · max(Var(t), ε)` for every constraint. After the `1/N_S`
    /// factor on C₁/C₂ this charges `2·Var(t)` per unit of squared residual,
    /// more than moving any one sample between groups can save.
    pub fn default_for(d: &Dataset) -> Self {
        Self::uniform(2.0 * d.n_samples() as f64 * d.target_variance().max(VARIANCE_FLOOR))
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            lambda1: self.lambda1 * factor,
            lambda2: self.lambda2 * factor,
            lambda3: self.lambda3 * factor,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A quadratic pseudo-boolean polynomial in minimization form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qubo {
    linear: Vec<f64>,
    /// Sorted by `(l, m)` with `l < m`.
    quadratic: Vec<(usize, usize, f64)>,
    offset: f64,
}

impl Qubo {
    /// Canonicalizes the given terms: pairs are reordered to `l < m`,
    /// duplicates are summed, diagonal entries fold into the linear part.
    pub fn new(
        linear: Vec<f64>,
        quadratic: impl IntoIterator<Item = (usize, usize, f64)>,
        offset: f64,
    ) -> Result<Self> {
        let n = linear.len();
        let mut b = QuboBuilder::new(n);
        b.offset = offset;
        b.linear = linear;
        for (l, m, v) in quadratic {
            if l >= n || m >= n {
                return Err(Error::Shape {
                    expected: n,
                    actual: l.max(m) + 1,
                });
            }
            b.add_pair(l, m, v);
        }
        Ok(b.finish())
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.n_vars() {
            return Err(Error::Shape {
                expected: self.n_vars(),
                actual: bits.len(),
            });
        }
        let mut e = self.offset;
        for (b, &v) in self.linear.iter().zip(bits) {
            if v == 1 {
                e += b;
            }
        }
        for &(l, m, q) in &self.quadratic {
            if bits[l] == 1 && bits[m] == 1 {
                e += q;
            }
        }
        Ok(e)
    }

    /// Largest absolute coefficient, used to scale numeric tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        self.linear
            .iter()
            .copied()
            .chain(self.quadratic.iter().map(|t| t.2))
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Writes `offset`, `l` and `q` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "offset {}", self.offset).unwrap();
        for (i, v) in self.linear.iter().enumerate() {
            if *v != 0.0 {
                writeln!(out, "l {i} {v}").unwrap();
            }
        }
        for &(l, m, v) in &self.quadratic {
            writeln!(out, "q {l} {m} {v}").unwrap();
        }
        out
    }

    /// Parses the text export. `n_vars` sizes the linear vector, since zero
    /// coefficients are omitted from the file.
    pub fn from_text(text: &str, n_vars: usize) -> Result<Self> {
        let mut offset = 0.0;
        let mut linear = vec![0.0; n_vars];
        let mut quadratic = Vec::new();
        let bad = |line: usize, msg: &str| Error::Format {
            row: line,
            column: String::new(),
            message: msg.to_owned(),
        };
        for (ln, line) in text.lines().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(ln, "bad number"));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(ln, "bad index"));
            match parts.as_slice() {
                [] => {}
                ["offset", v] => offset = num(v)?,
                ["l", i, v] => {
                    let i = idx(i)?;
                    if i >= n_vars {
                        return Err(bad(ln, "index out of range"));
                    }
                    linear[i] += num(v)?;
                }
                ["q", i, j, v] => quadratic.push((idx(i)?, idx(j)?, num(v)?)),
                _ => return Err(bad(ln, "unrecognized line")),
            }
        }
        Self::new(linear, quadratic, offset)
    }
}

/// Sparse affine form `constant + Σ coef·θ_var`.
#[derive(Debug, Clone, Default)]
pub struct LinearExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(mut self, var: usize, coef: f64) -> Self {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
        self
    }
}

/// Accumulates polynomial terms, applying `θ² = θ`.
#[derive(Debug, Clone)]
pub struct QuboBuilder {
    linear: Vec<f64>,
    pairs: HashMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboBuilder {
    pub fn new(n_vars: usize) -> Self {
        Self {
            linear: vec![0.0; n_vars],
            pairs: HashMap::new(),
            offset: 0.0,
        }
    }

    pub fn add_constant(&mut self, v: f64) {
        self.offset += v;
    }

    pub fn add_linear(&mut self, l: usize, v: f64) {
        self.linear[l] += v;
    }

    pub fn add_pair(&mut self, l: usize, m: usize, v: f64) {
        if l == m {
            self.linear[l] += v;
        } else {
            *self.pairs.entry((l.min(m), l.max(m))).or_insert(0.0) += v;
        }
    }

    /// Adds `scale · a · b`.
    pub fn add_product(&mut self, a: &LinearExpr, b: &LinearExpr, scale: f64) {
        self.offset += scale * a.constant * b.constant;
        for &(l, ca) in &a.terms {
            self.linear[l] += scale * ca * b.constant;
        }
        for &(l, cb) in &b.terms {
            self.linear[l] += scale * a.constant * cb;
        }
        for &(l, ca) in &a.terms {
            for &(m, cb) in &b.terms {
                self.add_pair(l, m, scale * ca * cb);
            }
        }
    }

    /// Adds `scale · e²`.
    pub fn add_square(&mut self, e: &LinearExpr, scale: f64) {
        self.offset += scale * e.constant * e.constant;
        for (k, &(l, cl)) in e.terms.iter().enumerate() {
            self.linear[l] += scale * (cl * cl + 2.0 * e.constant * cl);
            for &(m, cm) in &e.terms[k + 1..] {
                self.add_pair(l, m, 2.0 * scale * cl * cm);
            }
        }
    }

    pub fn finish(self) -> Qubo {
        let sorted: BTreeMap<(usize, usize), f64> = self.pairs.into_iter().collect();
        Qubo {
            linear: self.linear,
            quadratic: sorted
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((l, m), v)| (l, m, v))
                .collect(),
            offset: self.offset,
        }
    }
}

/// The compiled Hamiltonian for one dataset and `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    pub layout: VariableLayout,
    pub weights: PenaltyWeights,
    /// `max(Var(t), ε)` of the dataset the model was built from.
    pub target_scale: f64,
    qubo: Qubo,
}

impl QuboModel {
    pub fn qubo(&self) -> &Qubo {
        &self.qubo
    }

    pub fn energy(&self, a: &Assignment) -> Result<f64> {
        self.qubo.energy(&a.bits)
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.qubo.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Binary assignment over every model variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pub bits: Vec<u8>,
}

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The unique zero-penalty assignment for `f`: θ_X one-hot on the true
    /// unsatisfied count of every sample, θ_U one-hot on `|f|`.
    pub fn encode(d: &Dataset, f: &FingerprintSet, layout: &VariableLayout) -> Result<Self> {
        if f.u() == 0 || f.u() > layout.m {
            return Err(Error::Range {
                what: "selected fingerprint count",
                value: f.u(),
                min: 1,
                max: layout.m,
            });
        }
        if d.n_samples() != layout.n_s || d.n_fingerprints() != layout.n_f {
            return Err(Error::Shape {
                expected: layout.n_s,
                actual: d.n_samples(),
            });
        }
        let mut bits = vec![0u8; layout.total];
        for &j in f.indices() {
            bits[layout.fingerprint(j)] = 1;
        }
        for i in 0..layout.n_s {
            let missed = f.indices().iter().filter(|&&j| d.value(i, j) == 0).count();
            bits[layout.unsatisfied(i, missed)] = 1;
        }
        bits[layout.slack(f.u())] = 1;
        Ok(Self { bits })
    }
}

/// Compiles `H = SWMSE + (λ₁/N)·ΣC₁ + (λ₂/N)·ΣC₂ + λ₃·C₃`.
///
/// The loss term is `(1/N²)·Σ_b (N_b·Σ_b t² − (Σ_b t)²)`, i.e. exactly the
/// square-weighted MSE of the split encoded by `θ_X,·,0`.
pub fn build_qubo(d: &Dataset, m: usize, w: PenaltyWeights) -> Result<QuboModel> {
    let n_f = d.n_fingerprints();
    let n_s = d.n_samples();
    if m < 1 || m > n_f {
        return Err(Error::Range {
            what: "M",
            value: m,
            min: 1,
            max: n_f,
        });
    }
    if n_s < 2 {
        return Err(Error::Degenerate("QUBO needs at least two samples"));
    }
    w.validate()?;
    let layout = VariableLayout::new(n_f, n_s, m);
    let n = n_s as f64;
    let t = d.targets();
    let mut b = QuboBuilder::new(layout.total);

    // loss, with x_i = θ_X,i,0 marking group 1
    let in_group = |weight: &dyn Fn(usize) -> f64| {
        (0..n_s).fold(LinearExpr::default(), |e, i| {
            e.term(layout.unsatisfied(i, 0), weight(i))
        })
    };
    let out_group = |weight: &dyn Fn(usize) -> f64| {
        (0..n_s).fold(LinearExpr::constant((0..n_s).map(weight).sum()), |e, i| {
            e.term(layout.unsatisfied(i, 0), -weight(i))
        })
    };
    let scale = 1.0 / (n * n);
    let sq1 = in_group(&|i| t[i] * t[i]);
    let cnt1 = in_group(&|_| 1.0);
    let sum1 = in_group(&|i| t[i]);
    let sq0 = out_group(&|i| t[i] * t[i]);
    let cnt0 = out_group(&|_| 1.0);
    let sum0 = out_group(&|i| t[i]);
    b.add_product(&sq1, &cnt1, scale);
    b.add_square(&sum1, -scale);
    b.add_product(&sq0, &cnt0, scale);
    b.add_square(&sum0, -scale);

    // C1: unsatisfied producted columns must match the θ_X count
    // C2: θ_X one-hot per sample
    for i in 0..n_s {
        let mut c1 = LinearExpr::default();
        for j in 0..n_f {
            if d.value(i, j) == 0 {
                c1 = c1.term(layout.fingerprint(j), 1.0);
            }
        }
        let mut c2 = LinearExpr::constant(-1.0);
        for c in 0..=m {
            c1 = c1.term(layout.unsatisfied(i, c), -(c as f64));
            c2 = c2.term(layout.unsatisfied(i, c), 1.0);
        }
        b.add_square(&c1, w.lambda1 / n);
        b.add_square(&c2, w.lambda2 / n);
    }

    // C3: 1 <= Σθ_F <= M through one-hot slack
    let mut count = LinearExpr::default();
    for j in 0..n_f {
        count = count.term(layout.fingerprint(j), 1.0);
    }
    let mut one_hot = LinearExpr::constant(-1.0);
    for u in 1..=m {
        count = count.term(layout.slack(u), -(u as f64));
        one_hot = one_hot.term(layout.slack(u), 1.0);
    }
    b.add_square(&count, w.lambda3);
    b.add_square(&one_hot, w.lambda3);

    Ok(QuboModel {
        layout,
        weights: w,
        target_scale: d.target_variance().max(VARIANCE_FLOOR),
        qubo: b.finish(),
    })
}

/// Reads θ_F only; θ_X and θ_U are ignored.
pub fn decode(a: &Assignment, layout: &VariableLayout) -> Result<FingerprintSet> {
    if a.len() != layout.total {
        return Err(Error::Shape {
            expected: layout.total,
            actual: a.len(),
        });
    }
    let f = FingerprintSet::new(
        (0..layout.n_f).filter(|&j| a.bits[layout.fingerprint(j)] == 1),
        layout.n_f,
    )?;
    if f.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedSolution {
    pub fingerprint: FingerprintSet,
    pub u: usize,
    /// Per sample: `Σ_j (1−X_ij)·θ_F,j − Σ_c c·θ_X,i,c`.
    pub c1_residuals: Vec<i64>,
    /// Per sample: `Σ_c θ_X,i,c − 1`.
    pub c2_residuals: Vec<i64>,
    pub c3_violated: bool,
    /// SWMSE of the split induced by the decoded fingerprint; `None` when
    /// nothing is selected.
    pub swmse: Option<f64>,
    pub valid: bool,
}

impl DecodedSolution {
    pub fn c1_violations(&self) -> usize {
        self.c1_residuals.iter().filter(|&&r| r != 0).count()
    }

    pub fn c2_violations(&self) -> usize {
        self.c2_residuals.iter().filter(|&&r| r != 0).count()
    }
}

pub fn check_constraints(
    d: &Dataset,
    a: &Assignment,
    layout: &VariableLayout,
) -> Result<DecodedSolution> {
    if a.len() != layout.total {
        return Err(Error::Shape {
            expected: layout.total,
            actual: a.len(),
        });
    }
    if d.n_samples() != layout.n_s || d.n_fingerprints() != layout.n_f {
        return Err(Error::Shape {
            expected: layout.n_s,
            actual: d.n_samples(),
        });
    }
    let bit = |l: usize| a.bits[l] as i64;
    let selected: Vec<usize> = (0..layout.n_f)
        .filter(|&j| a.bits[layout.fingerprint(j)] == 1)
        .collect();
    let mut c1 = Vec::with_capacity(layout.n_s);
    let mut c2 = Vec::with_capacity(layout.n_s);
    for i in 0..layout.n_s {
        let missed = selected.iter().filter(|&&j| d.value(i, j) == 0).count() as i64;
        let encoded: i64 = (0..=layout.m)
            .map(|c| c as i64 * bit(layout.unsatisfied(i, c)))
            .sum();
        let hot: i64 = (0..=layout.m).map(|c| bit(layout.unsatisfied(i, c))).sum();
        c1.push(missed - encoded);
        c2.push(hot - 1);
    }
    let slack_value: i64 = (1..=layout.m)
        .map(|u| u as i64 * bit(layout.slack(u)))
        .sum();
    let slack_hot: i64 = (1..=layout.m).map(|u| bit(layout.slack(u))).sum();
    let c3_violated = selected.len() as i64 != slack_value || slack_hot != 1;

    let u = selected.len();
    let fingerprint = FingerprintSet::new(selected, layout.n_f)?;
    let swmse = if fingerprint.is_empty() {
        None
    } else {
        Some(stump::score_fingerprint(
            d,
            &fingerprint,
            stump::Objective::Swmse,
        )?)
    };
    let valid = c1.iter().all(|&r| r == 0)
        && c2.iter().all(|&r| r == 0)
        && !c3_violated
        && (1..=layout.m).contains(&u);
    Ok(DecodedSolution {
        fingerprint,
        u,
        c1_residuals: c1,
        c2_residuals: c2,
        c3_violated,
        swmse,
        valid,
    })
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ConicError;

/// One block of the product cone. Rows of a program are grouped into blocks
/// in the order zero, nonnegative, second-order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "dim", rename_all = "snake_case")]
pub enum Cone {
    Zero(usize),
    Nonnegative(usize),
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::Nonnegative(d) | Cone::SecondOrder(d) => d,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Cone::Zero(_) => 0,
            Cone::Nonnegative(_) => 1,
            Cone::SecondOrder(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub blocks: Vec<Cone>,
}

impl ConeSpec {
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(Cone::dim).sum()
    }

    /// Row ranges of each block, in block order.
    pub fn ranges(&self) -> Vec<(Cone, std::ops::Range<usize>)> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|&c| {
                let r = start..start + c.dim();
                start += c.dim();
                (c, r)
            })
            .collect()
    }
}

/// Sparse matrix stored as (row, col, value) triplets. Duplicates are summed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    /// y = A x
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// y = Aᵀ z
    pub fn mul_t(&self, z: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for &(i, j, v) in &self.entries {
            y[j] += v * z[i];
        }
        y
    }

    /// Compressed sparse column arrays (colptr, rowval, nzval) with duplicates merged.
    pub fn to_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut sorted: Vec<(usize, usize, f64)> = self.entries.clone();
        sorted.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut colptr = vec![0usize; self.ncols + 1];
        let mut rowval = Vec::with_capacity(sorted.len());
        let mut nzval: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *nzval.last_mut().unwrap() += v;
                continue;
            }
            rowval.push(i);
            nzval.push(v);
            colptr[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..self.ncols {
            colptr[j + 1] += colptr[j];
        }
        (colptr, rowval, nzval)
    }
}

/// `minimize objectiveᵀx + objective_constant  s.t.  A x + offset ∈ K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    #[serde(default)]
    pub objective_constant: f64,
    pub constraint_matrix: Triplets,
    pub constraint_offset: Vec<f64>,
    pub cones: ConeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_names: Option<BTreeMap<usize, String>>,
    /// `row_origin[i]` is the index of the caller's row that became program row `i`.
    #[serde(default)]
    pub row_origin: Vec<usize>,
}

impl ConicProgram {
    pub fn num_rows(&self) -> usize {
        self.constraint_offset.len()
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let rows = self.constraint_offset.len();
        if self.constraint_matrix.nrows != rows || self.cones.total_dim() != rows {
            return Err(ConicError::Dimension(format!(
                "matrix has {} rows, offset has {}, cones cover {}",
                self.constraint_matrix.nrows,
                rows,
                self.cones.total_dim()
            )));
        }
        if self.objective.len() != self.num_vars || self.constraint_matrix.ncols != self.num_vars {
            return Err(ConicError::Dimension(format!(
                "objective has {} entries, matrix has {} columns, program has {} variables",
                self.objective.len(),
                self.constraint_matrix.ncols,
                self.num_vars
            )));
        }
        if let Some(&(i, j, _)) = self.constraint_matrix.entries.iter().find(|e| e.0 >= rows || e.1 >= self.num_vars) {
            return Err(ConicError::Dimension(format!("matrix entry ({i}, {j}) out of range")));
        }
        if self.cones.blocks.iter().any(|c| c.dim() == 0) {
            return Err(ConicError::Dimension("empty cone block".into()));
        }
        if self.cones.blocks.windows(2).any(|w| w[0].rank() > w[1].rank()) {
            return Err(ConicError::Dimension("cone blocks out of zero/nonnegative/second-order order".into()));
        }
        Ok(())
    }

    /// Affine row values `A x + c`.
    pub fn row_values(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.constraint_matrix.mul(x);
        for (si, ci) in s.iter_mut().zip(&self.constraint_offset) {
            *si += ci;
        }
        s
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.objective_constant
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("program is always serializable")
    }

    pub fn write_json(&self, path: &std::path::Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }
}

/// Cone membership tag for a single row passed to [`assemble`]. Rows sharing a
/// `SecondOrder` group id form one cone, first row being the norm bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowCone {
    Zero,
    Nonnegative,
    SecondOrder(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub offset: f64,
    pub cone: RowCone,
}

/// Builds a program from dense rows, grouping them into contiguous cone blocks.
pub fn assemble(objective: Vec<f64>, rows: Vec<Row>) -> Result<ConicProgram, ConicError> {
    let n = objective.len();
    let mut b = ProgramBuilder::new();
    let vars = b.vars(n);
    for (c, &v) in objective.iter().zip(&vars) {
        b.add_cost(v, *c);
    }
    let mut soc_groups: Vec<(usize, Vec<LinExpr>)> = Vec::new();
    for (idx, row) in rows.into_iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(ConicError::Assembly {
                row: idx,
                reason: format!("{} coefficients for {} variables", row.coeffs.len(), n),
            });
        }
        let mut e = LinExpr::constant(row.offset);
        for (j, &c) in row.coeffs.iter().enumerate() {
            if c != 0.0 {
                e.add(vars[j], c);
            }
        }
        match row.cone {
            RowCone::Zero => b.push_row(e, Kind::Zero, idx),
            RowCone::Nonnegative => b.push_row(e, Kind::Nonneg, idx),
            RowCone::SecondOrder(g) => match soc_groups.iter_mut().find(|(id, _)| *id == g) {
                Some((_, rows)) => rows.push(e.with_origin(idx)),
                None => soc_groups.push((g, vec![e.with_origin(idx)])),
            },
        }
    }
    for (_, rows) in soc_groups {
        b.push_soc(rows);
    }
    b.build()
}

/// Sparse affine expression `Σ coeff·x[var] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
    origin: Option<usize>,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c, origin: None }
    }

    pub fn var(v: usize) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: usize, c: f64) -> Self {
        Self { terms: vec![(v, c)], constant: 0.0, origin: None }
    }

    pub fn add(&mut self, v: usize, c: f64) -> &mut Self {
        if c != 0.0 {
            self.terms.push((v, c));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        if scale != 0.0 {
            for &(v, c) in &other.terms {
                self.terms.push((v, c * scale));
            }
            self.constant += other.constant * scale;
        }
        self
    }

    pub fn plus(mut self, v: usize, c: f64) -> Self {
        self.add(v, c);
        self
    }

    pub fn plus_expr(mut self, other: &LinExpr, scale: f64) -> Self {
        self.add_expr(other, scale);
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>() + self.constant
    }

    fn with_origin(mut self, idx: usize) -> Self {
        self.origin = Some(idx);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Zero,
    Nonneg,
}

/// Incremental program construction with named variables.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    num_vars: usize,
    cost: Vec<(usize, f64)>,
    cost_constant: f64,
    zero: Vec<(LinExpr, usize)>,
    nonneg: Vec<(LinExpr, usize)>,
    soc: Vec<Vec<(LinExpr, usize)>>,
    next_row: usize,
    names: BTreeMap<usize, String>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn named_var(&mut self, name: impl Into<String>) -> usize {
        let v = self.var();
        self.names.insert(v, name.into());
        v
    }

    pub fn vars(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.var()).collect()
    }

    pub fn named_vars(&mut self, n: usize, name: &str) -> Vec<usize> {
        (0..n).map(|i| self.named_var(format!("{name}[{i}]"))).collect()
    }

    pub fn add_cost(&mut self, v: usize, c: f64) {
        if c != 0.0 {
            self.cost.push((v, c));
        }
    }

    pub fn add_cost_expr(&mut self, e: &LinExpr, scale: f64) {
        for &(v, c) in &e.terms {
            self.add_cost(v, c * scale);
        }
        self.cost_constant += e.constant * scale;
    }

    /// `e = 0`
    pub fn zero(&mut self, e: LinExpr) {
        let idx = self.next_row;
        self.push_row(e, Kind::Zero, idx);
    }

    /// `e ≥ 0`
    pub fn nonneg(&mut self, e: LinExpr) {
        let idx = self.next_row;
        self.push_row(e, Kind::Nonneg, idx);
    }

    /// `‖v‖₂ ≤ t`
    pub fn soc(&mut self, t: LinExpr, v: Vec<LinExpr>) {
        let mut rows = Vec::with_capacity(v.len() + 1);
        rows.push(t);
        rows.extend(v);
        self.push_soc(rows);
    }

    /// `‖v‖₂² ≤ t`, through the rotated-cone identity
    /// `‖(v, (t−1)/2)‖ ≤ (t+1)/2`.
    pub fn square_epigraph(&mut self, t: &LinExpr, v: Vec<LinExpr>) {
        let top = t.clone().scaled(0.5).plus_constant(0.5);
        let mut rows = v;
        rows.push(t.clone().scaled(0.5).plus_constant(-0.5));
        self.soc(top, rows);
    }

    /// Introduces `a ≥ |e|` elementwise and returns the bound variables.
    pub fn abs_bounds(&mut self, es: &[LinExpr]) -> Vec<usize> {
        es.iter()
            .map(|e| {
                let a = self.var();
                self.nonneg(LinExpr::var(a).plus_expr(e, -1.0));
                self.nonneg(LinExpr::var(a).plus_expr(e, 1.0));
                a
            })
            .collect()
    }

    /// Introduces `t ≥ ‖e‖₂` and returns `t`.
    pub fn norm2_bound(&mut self, es: Vec<LinExpr>) -> usize {
        let t = self.var();
        self.soc(LinExpr::var(t), es);
        t
    }

    fn push_row(&mut self, e: LinExpr, kind: Kind, origin: usize) {
        self.next_row = self.next_row.max(origin + 1);
        match kind {
            Kind::Zero => self.zero.push((e, origin)),
            Kind::Nonneg => self.nonneg.push((e, origin)),
        }
    }

    fn push_soc(&mut self, rows: Vec<LinExpr>) {
        let block = rows
            .into_iter()
            .map(|e| {
                let origin = e.origin.unwrap_or(self.next_row);
                self.next_row = self.next_row.max(origin + 1);
                (e, origin)
            })
            .collect();
        self.soc.push(block);
    }

    pub fn build(self) -> Result<ConicProgram, ConicError> {
        let n = self.num_vars;
        let mut objective = vec![0.0; n];
        for (v, c) in self.cost {
            objective[v] += c;
        }
        let mut a = Triplets::new(0, n);
        let mut offset = Vec::new();
        let mut origin = Vec::new();
        let mut blocks = Vec::new();
        let mut push = |e: &LinExpr, o: usize, a: &mut Triplets| -> Result<(), ConicError> {
            let row = a.nrows;
            for &(v, c) in &e.terms {
                if v >= n {
                    return Err(ConicError::Assembly { row: o, reason: format!("unknown variable {v}") });
                }
                if !c.is_finite() {
                    return Err(ConicError::Assembly { row: o, reason: format!("non-finite coefficient {c}") });
                }
                a.entries.push((row, v, c));
            }
            a.nrows += 1;
            offset.push(e.constant);
            origin.push(o);
            Ok(())
        };
        if !self.zero.is_empty() {
            blocks.push(Cone::Zero(self.zero.len()));
        }
        for (e, o) in &self.zero {
            push(e, *o, &mut a)?;
        }
        if !self.nonneg.is_empty() {
            blocks.push(Cone::Nonnegative(self.nonneg.len()));
        }
        for (e, o) in &self.nonneg {
            push(e, *o, &mut a)?;
        }
        for block in &self.soc {
            blocks.push(Cone::SecondOrder(block.len()));
            for (e, o) in block {
                push(e, *o, &mut a)?;
            }
        }
        let program = ConicProgram {
            num_vars: n,
            objective,
            objective_constant: self.cost_constant,
            constraint_matrix: a,
            constraint_offset: offset,
            cones: ConeSpec { blocks },
            var_names: if self.names.is_empty() { None } else { Some(self.names) },
            row_origin: origin,
        };
        program.validate()?;
        Ok(program)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assemble_groups_cones_in_order() {
        let rows = vec![
            Row { coeffs: vec![0.0, 0.0, 1.0], offset: 0.0, cone: RowCone::SecondOrder(7) },
            Row { coeffs: vec![1.0, 0.0, 0.0], offset: -1.0, cone: RowCone::Nonnegative },
            Row { coeffs: vec![1.0, 0.0, 0.0], offset: 0.0, cone: RowCone::SecondOrder(7) },
            Row { coeffs: vec![0.0, 1.0, 0.0], offset: 0.0, cone: RowCone::Zero },
            Row { coeffs: vec![0.0, 1.0, 0.0], offset: 0.0, cone: RowCone::SecondOrder(7) },
        ];
        let p = assemble(vec![0.0, 0.0, 1.0], rows).unwrap();
        assert_eq!(p.cones.blocks, vec![Cone::Zero(1), Cone::Nonnegative(1), Cone::SecondOrder(3)]);
        assert_eq!(p.row_origin, vec![3, 1, 0, 2, 4]);
    }

    #[test]
    fn assemble_reports_bad_row() {
        let rows = vec![
            Row { coeffs: vec![1.0], offset: 0.0, cone: RowCone::Zero },
            Row { coeffs: vec![1.0, 2.0], offset: 0.0, cone: RowCone::Zero },
        ];
        match assemble(vec![1.0], rows) {
            Err(ConicError::Assembly { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_program() {
        let p = assemble(vec![0.0, 0.0], vec![]).unwrap();
        assert_eq!(p.num_vars, 2);
        assert_eq!(p.num_rows(), 0);
        assert!(p.cones.blocks.is_empty());
    }

    #[test]
    fn csc_merges_duplicates() {
        let mut t = Triplets::new(2, 2);
        t.entries = vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, 3.0), (0, 1, -1.0)];
        let (colptr, rowval, nzval) = t.to_csc();
        assert_eq!(colptr, vec![0, 1, 3]);
        assert_eq!(rowval, vec![0, 0, 1]);
        assert_eq!(nzval, vec![2.0, -1.0, 4.0]);
    }

    #[test]
    fn json_round_trip() {
        let mut b = ProgramBuilder::new();
        let x = b.named_var("x");
        b.add_cost(x, 1.0);
        b.nonneg(LinExpr::var(x).plus_constant(-1.0));
        let p = b.build().unwrap();
        let back: ConicProgram = serde_json::from_value(p.to_json()).unwrap();
        assert_eq!(back, p);
        assert_eq!(p.to_json()["cones"]["blocks"][0]["kind"], "nonnegative");
    }
}

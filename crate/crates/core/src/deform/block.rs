//! Block operators built from `d`, `d*` and identities on `Λ⁰ ⊕ Λ¹ ⊕ Λ²`.
//!
//! Each block is a sum of terms `c · P₁ ∘ ⋯ ∘ P_m`. Chains of `d` and identities are
//! evaluated as exact sparse integer-coefficient products, so structural cancellations
//! such as `D₂D₁ = 0` are reproduced without rounding. Codifferentials are lowered into
//! the weighted form `M_W⁻¹(W₀ + W₁K⁻¹L)` of [`WeightedOperator`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dec::FormOperators;
use crate::error::{Error, Result};
use crate::linalg::{Csr, WeightedOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    /// `d_k : Λ^k → Λ^{k+1}`.
    D(usize),
    /// `d*_k : Λ^k → Λ^{k−1}`.
    Codiff(usize),
    Id(usize),
}

impl Prim {
    pub fn src(&self) -> usize {
        match *self {
            Prim::D(k) | Prim::Codiff(k) | Prim::Id(k) => k,
        }
    }

    pub fn dst(&self) -> usize {
        match *self {
            Prim::D(k) => k + 1,
            Prim::Codiff(k) => k - 1,
            Prim::Id(k) => k,
        }
    }
}

/// `coef · chain[0] ∘ chain[1] ∘ ⋯` (the last primitive acts first).
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub chain: Vec<Prim>,
}

impl Term {
    pub fn new(coef: f64, chain: Vec<Prim>) -> Self {
        Term { coef, chain }
    }

    fn has_codiff(&self) -> bool {
        self.chain.iter().any(|p| matches!(p, Prim::Codiff(_)))
    }
}

/// Block operator `⊕_j Λ^{dom[j]} → ⊕_i Λ^{cod[i]}`; `blocks[i][j]` is a sum of terms.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    pub name: String,
    pub dom: Vec<usize>,
    pub cod: Vec<usize>,
    pub blocks: Vec<Vec<Vec<Term>>>,
}

fn t(coef: f64, chain: &[Prim]) -> Vec<Term> {
    vec![Term::new(coef, chain.to_vec())]
}

impl BlockOperator {
    pub fn new(name: &str, dom: Vec<usize>, cod: Vec<usize>, blocks: Vec<Vec<Vec<Term>>>) -> Result<Self> {
        if blocks.len() != cod.len() || blocks.iter().any(|r| r.len() != dom.len()) {
            return Err(Error::Dimension(format!("{name}: block grid does not match its degrees")));
        }
        for (i, row) in blocks.iter().enumerate() {
            for (j, terms) in row.iter().enumerate() {
                for term in terms {
                    check_chain(&term.chain, dom[j], cod[i]).map_err(|m| Error::Dimension(format!("{name}: {m}")))?;
                }
            }
        }
        Ok(BlockOperator { name: name.to_string(), dom, cod, blocks })
    }

    /// Removes block rows and columns of degree above `n`.
    pub fn truncate(&self, n: usize) -> BlockOperator {
        let rows: Vec<usize> = (0..self.cod.len()).filter(|&i| self.cod[i] <= n).collect();
        let cols: Vec<usize> = (0..self.dom.len()).filter(|&j| self.dom[j] <= n).collect();
        BlockOperator {
            name: self.name.clone(),
            dom: cols.iter().map(|&j| self.dom[j]).collect(),
            cod: rows.iter().map(|&i| self.cod[i]).collect(),
            blocks: rows
                .iter()
                .map(|&i| {
                    cols.iter()
                        .map(|&j| {
                            // a term passing through a dropped degree is identically zero
                            self.blocks[i][j]
                                .iter()
                                .filter(|term| chain_degrees(&term.chain).iter().all(|&k| k <= n))
                                .cloned()
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &BlockOperator) -> Result<BlockOperator> {
        if self.dom != other.cod {
            return Err(Error::Dimension(format!("cannot compose {} after {}", self.name, other.name)));
        }
        let mut blocks = vec![vec![Vec::new(); other.dom.len()]; self.cod.len()];
        for (i, row) in blocks.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..self.dom.len() {
                    for a in &self.blocks[i][k] {
                        for b in &other.blocks[k][j] {
                            let mut chain = a.chain.clone();
                            chain.extend_from_slice(&b.chain);
                            cell.push(Term::new(a.coef * b.coef, chain));
                        }
                    }
                }
            }
        }
        Ok(BlockOperator {
            name: format!("{}∘{}", self.name, other.name),
            dom: other.dom.clone(),
            cod: self.cod.clone(),
            blocks,
        })
    }

    pub fn has_codiff(&self) -> bool {
        self.blocks.iter().flatten().flatten().any(Term::has_codiff)
    }

    fn sizes(ops: &FormOperators, degs: &[usize]) -> Vec<usize> {
        degs.iter().map(|&k| ops.dim(k)).collect()
    }

    /// Exact sparse matrix of a codifferential-free operator.
    pub fn strong_sparse(&self, ops: &FormOperators) -> Result<Csr> {
        if self.has_codiff() {
            return Err(Error::Assembly(format!("{} contains codifferentials; use the weighted form", self.name)));
        }
        let rs = Self::sizes(ops, &self.cod);
        let cs = Self::sizes(ops, &self.dom);
        let mats: Vec<Vec<Csr>> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, terms)| {
                        let mut acc = Csr::zeros(rs[i], cs[j]);
                        for term in terms {
                            let m = chain_matrix(ops, &term.chain, self.dom[j]);
                            acc = acc.add(&m, 1.0, term.coef);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let grid: Vec<Vec<Option<&Csr>>> = mats.iter().map(|r| r.iter().map(Some).collect()).collect();
        Ok(Csr::block(&rs, &cs, &grid))
    }

    /// Lowers the operator to `M_W⁻¹(W₀ + W₁K⁻¹L)` with block-diagonal star masses.
    pub fn weighted(&self, ops: &FormOperators) -> Result<WeightedOperator> {
        let rs = Self::sizes(ops, &self.cod);
        let cs = Self::sizes(ops, &self.dom);
        let mut w0_blocks: Vec<Vec<Csr>> = Vec::with_capacity(rs.len());
        // interior codifferentials: (row block, W₁ piece, K, column block, L piece)
        let mut aux: Vec<(usize, Csr, Csr, usize, Csr)> = Vec::new();
        for (i, row) in self.blocks.iter().enumerate() {
            let q = self.cod[i];
            let mut r = Vec::with_capacity(cs.len());
            for (j, terms) in row.iter().enumerate() {
                let p = self.dom[j];
                let mut acc = Csr::zeros(rs[i], cs[j]);
                for term in terms {
                    let pos: Vec<usize> = term
                        .chain
                        .iter()
                        .enumerate()
                        .filter(|(_, x)| matches!(x, Prim::Codiff(_)))
                        .map(|(k, _)| k)
                        .collect();
                    match pos.as_slice() {
                        [] => {
                            let m = ops.star[q].matmul(&chain_matrix(ops, &term.chain, p));
                            acc = acc.add(&m, 1.0, term.coef);
                        }
                        [0] => {
                            let Prim::Codiff(k) = term.chain[0] else { unreachable!() };
                            let rest = chain_matrix(ops, &term.chain[1..], p);
                            let m = ops.codiff_weak(k).matmul(&rest);
                            acc = acc.add(&m, 1.0, term.coef);
                        }
                        [c] => {
                            let Prim::Codiff(k) = term.chain[*c] else { unreachable!() };
                            let left = chain_matrix(ops, &term.chain[..*c], k - 1);
                            let w1 = ops.star[q].matmul(&left).scale(term.coef);
                            let l = ops.codiff_weak(k).matmul(&chain_matrix(ops, &term.chain[c + 1..], p));
                            aux.push((i, w1, ops.star[k - 1].clone(), j, l));
                        }
                        _ => {
                            return Err(Error::Assembly(format!(
                                "{}: chains with several codifferentials are not supported",
                                self.name
                            )))
                        }
                    }
                }
                r.push(acc);
            }
            w0_blocks.push(r);
        }
        let grid: Vec<Vec<Option<&Csr>>> = w0_blocks.iter().map(|r| r.iter().map(Some).collect()).collect();
        let w0 = Csr::block(&rs, &cs, &grid);
        let cod_masses: Vec<&Csr> = self.cod.iter().map(|&k| &ops.star[k]).collect();
        let dom_masses: Vec<&Csr> = self.dom.iter().map(|&k| &ops.star[k]).collect();
        let aux = if aux.is_empty() {
            None
        } else {
            let asz: Vec<usize> = aux.iter().map(|a| a.2.nrows).collect();
            let mut w1g: Vec<Vec<Option<&Csr>>> = vec![vec![None; aux.len()]; rs.len()];
            let mut lg: Vec<Vec<Option<&Csr>>> = vec![vec![None; cs.len()]; aux.len()];
            for (m, (i, w1, _, j, l)) in aux.iter().enumerate() {
                w1g[*i][m] = Some(w1);
                lg[m][*j] = Some(l);
            }
            let ks: Vec<&Csr> = aux.iter().map(|a| &a.2).collect();
            Some(crate::linalg::weighted::Aux {
                w1: Csr::block(&rs, &asz, &w1g),
                k: Csr::block_diag(&ks),
                l: Csr::block(&asz, &cs, &lg),
            })
        };
        Ok(WeightedOperator {
            w0,
            aux,
            dom_mass: Csr::block_diag(&dom_masses),
            cod_mass: Csr::block_diag(&cod_masses),
        })
    }

    /// Strong application term by term.
    pub fn apply(&self, ops: &FormOperators, x: &[f64]) -> Result<Vec<f64>> {
        let cs = Self::sizes(ops, &self.dom);
        let rs = Self::sizes(ops, &self.cod);
        let total: usize = cs.iter().sum();
        if x.len() != total {
            return Err(Error::Dimension(format!("{}: input has {} entries, expected {total}", self.name, x.len())));
        }
        let mut parts = Vec::with_capacity(cs.len());
        let mut o = 0;
        for &c in &cs {
            parts.push(&x[o..o + c]);
            o += c;
        }
        let mut out = Vec::with_capacity(rs.iter().sum());
        for (i, row) in self.blocks.iter().enumerate() {
            let mut acc = vec![0.0; rs[i]];
            for (j, terms) in row.iter().enumerate() {
                for term in terms {
                    let mut y = parts[j].to_vec();
                    for prim in term.chain.iter().rev() {
                        y = match *prim {
                            Prim::D(k) => ops.d(k).matvec(&y),
                            Prim::Codiff(k) => ops.codiff(k, &y),
                            Prim::Id(_) => y,
                        };
                    }
                    acc.iter_mut().zip(&y).for_each(|(a, b)| *a += term.coef * b);
                }
            }
            out.extend(acc);
        }
        Ok(out)
    }
}

fn chain_degrees(chain: &[Prim]) -> Vec<usize> {
    let mut v: Vec<usize> = chain.iter().map(Prim::dst).collect();
    if let Some(last) = chain.last() {
        v.push(last.src());
    }
    v
}

fn check_chain(chain: &[Prim], src: usize, dst: usize) -> std::result::Result<(), String> {
    let Some(last) = chain.last() else { return Err("empty chain".into()) };
    if last.src() != src || chain[0].dst() != dst {
        return Err(format!("chain {chain:?} does not map Λ^{src} to Λ^{dst}"));
    }
    for w in chain.windows(2) {
        if w[1].dst() != w[0].src() {
            return Err(format!("chain {chain:?} is not composable"));
        }
    }
    if chain.iter().any(|p| matches!(p, Prim::Codiff(0))) {
        return Err("d* on Λ⁰".into());
    }
    Ok(())
}

/// Sparse product of a codifferential-free chain acting on `Λ^src`.
fn chain_matrix(ops: &FormOperators, chain: &[Prim], src: usize) -> Csr {
    let mut m = Csr::identity(ops.dim(src));
    for prim in chain.iter().rev() {
        m = match *prim {
            Prim::D(k) => ops.d(k).matmul(&m),
            Prim::Id(_) => m,
            Prim::Codiff(_) => unreachable!("codifferentials are lowered separately"),
        };
    }
    m
}

/// The linearized deformation operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    SpecialLegendrian,
    NxComplex,
    LegendrianComplex,
    Transverse,
    ContactCy,
    MinimalLegendrian,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 6] = [
        OperatorKind::SpecialLegendrian,
        OperatorKind::NxComplex,
        OperatorKind::LegendrianComplex,
        OperatorKind::Transverse,
        OperatorKind::ContactCy,
        OperatorKind::MinimalLegendrian,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::SpecialLegendrian => "special_legendrian",
            OperatorKind::NxComplex => "nx_complex",
            OperatorKind::LegendrianComplex => "legendrian_complex",
            OperatorKind::Transverse => "transverse",
            OperatorKind::ContactCy => "contact_cy",
            OperatorKind::MinimalLegendrian => "minimal_legendrian",
        }
    }

    /// Whether the domain is `Λ⁰ ⊕ Λ¹` (otherwise `Λ¹`).
    pub fn has_function_part(&self) -> bool {
        !matches!(self, OperatorKind::Transverse)
    }

    /// Kernel counted by an eigenvalue cluster (absolute threshold) rather than exactly.
    pub fn is_cluster_kind(&self) -> bool {
        matches!(self, OperatorKind::SpecialLegendrian | OperatorKind::MinimalLegendrian)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let k = match key.as_str() {
            "special_legendrian" | "sl" => OperatorKind::SpecialLegendrian,
            "nx_complex" | "nx" => OperatorKind::NxComplex,
            "legendrian_complex" | "legendrian" => OperatorKind::LegendrianComplex,
            "transverse" | "special_lagrangian" => OperatorKind::Transverse,
            "contact_cy" => OperatorKind::ContactCy,
            "minimal_legendrian" | "minimal" => OperatorKind::MinimalLegendrian,
            _ => return Err(Error::Parameter(format!("unknown operator kind '{s}'"))),
        };
        Ok(k)
    }
}

/// `D₁`, the optional `D₂` and the checks that come with them.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub kind: OperatorKind,
    pub kappa: f64,
    pub d1: BlockOperator,
    pub d2: Option<BlockOperator>,
    /// `max |D₂D₁|` over the exact sparse product, when `D₂` is codifferential-free.
    pub complex_defect: Option<f64>,
    /// Relative asymmetry of the weak matrix for self-dual operators.
    pub symmetry_defect: Option<f64>,
}

impl AssembledOperator {
    pub fn d1_weighted(&self, ops: &FormOperators) -> Result<WeightedOperator> {
        self.d1.weighted(ops)
    }

    /// `D₁*` with respect to the star inner products.
    pub fn d1_adjoint(&self, ops: &FormOperators) -> Result<WeightedOperator> {
        Ok(self.d1.weighted(ops)?.adjoint())
    }

    /// Operator whose normal operator is `P₁ = D₁*D₁`.
    pub fn p1_root(&self, ops: &FormOperators) -> Result<WeightedOperator> {
        self.d1.weighted(ops)
    }

    /// Operator `x ↦ (D₁*x, D₂x)` whose normal operator is `P₂ = D₁D₁* + D₂*D₂`.
    pub fn p2_root(&self, ops: &FormOperators) -> Result<WeightedOperator> {
        let a = self.d1.weighted(ops)?.adjoint();
        match &self.d2 {
            Some(d2) if !d2.cod.is_empty() => {
                let b = d2.weighted(ops)?;
                WeightedOperator::stack(&[&a, &b])
            }
            _ => Ok(a),
        }
    }

    /// Whether `D₂D₁ = 0` holds with no floating-point residue.
    pub fn is_exact_complex(&self) -> Option<bool> {
        self.complex_defect.map(|d| d == 0.0)
    }
}

/// Builds `D₁` (and `D₂` for the complexes) for `kind` with weight `κ`. Degrees above the
/// mesh dimension are dropped.
pub fn assemble_operator(kind: OperatorKind, ops: &FormOperators, kappa: f64) -> Result<AssembledOperator> {
    if !kappa.is_finite() {
        return Err(Error::Parameter(format!("κ must be finite, got {kappa}")));
    }
    use Prim::*;
    let n = ops.n;
    let none = Vec::<Term>::new;
    let (d1, d2) = match kind {
        OperatorKind::SpecialLegendrian => (
            BlockOperator::new(
                "D1",
                vec![0, 1],
                vec![0, 1],
                vec![vec![t(kappa, &[Id(0)]), t(1.0, &[Codiff(1)])], vec![t(1.0, &[D(0)]), t(2.0, &[Id(1)])]],
            )?,
            None,
        ),
        OperatorKind::NxComplex => (
            BlockOperator::new(
                "D1",
                vec![0, 1],
                vec![0, 2],
                vec![vec![t(kappa, &[Id(0)]), t(1.0, &[Codiff(1)])], vec![none(), t(1.0, &[D(1)])]],
            )?,
            Some(BlockOperator::new("D2", vec![0, 2], vec![3], vec![vec![none(), t(1.0, &[D(2)])]])?),
        ),
        OperatorKind::LegendrianComplex => (
            BlockOperator::new(
                "D1",
                vec![0, 1],
                vec![1, 2],
                vec![vec![t(1.0, &[D(0)]), t(2.0, &[Id(1)])], vec![none(), t(1.0, &[D(1)])]],
            )?,
            Some(BlockOperator::new(
                "D2",
                vec![1, 2],
                vec![2, 3],
                vec![vec![t(1.0, &[D(1)]), t(-2.0, &[Id(2)])], vec![none(), t(1.0, &[D(2)])]],
            )?),
        ),
        OperatorKind::Transverse => (
            BlockOperator::new("D1", vec![1], vec![0, 2], vec![vec![t(1.0, &[Codiff(1)])], vec![t(1.0, &[D(1)])]])?,
            Some(BlockOperator::new("D2", vec![0, 2], vec![3], vec![vec![none(), t(1.0, &[D(2)])]])?),
        ),
        OperatorKind::ContactCy => (
            BlockOperator::new(
                "D1",
                vec![0, 1],
                vec![0, 1, 2],
                vec![
                    vec![none(), t(1.0, &[Codiff(1)])],
                    vec![t(1.0, &[D(0)]), t(2.0, &[Id(1)])],
                    vec![none(), t(1.0, &[D(1)])],
                ],
            )?,
            Some(BlockOperator::new(
                "D2",
                vec![0, 1, 2],
                vec![2, 3],
                vec![vec![none(), t(1.0, &[D(1)]), t(-2.0, &[Id(2)])], vec![none(), none(), t(1.0, &[D(2)])]],
            )?),
        ),
        OperatorKind::MinimalLegendrian => (
            BlockOperator::new(
                "D1",
                vec![0, 1],
                vec![1, 1],
                vec![vec![t(kappa, &[D(0)]), t(1.0, &[D(0), Codiff(1)])], vec![t(1.0, &[D(0)]), t(2.0, &[Id(1)])]],
            )?,
            None,
        ),
    };
    let d1 = d1.truncate(n);
    let d2 = d2.map(|b| b.truncate(n));
    let complex_defect = match &d2 {
        Some(d2) if !d2.has_codiff() && !d1.has_codiff() => {
            let m = d2.compose(&d1)?.strong_sparse(ops)?;
            Some(m.max_abs())
        }
        Some(d2) if !d2.has_codiff() => {
            // the codifferential rows of D₁ are annihilated by zero blocks of D₂
            let m = d2.compose(&d1)?;
            let live: bool = m.blocks.iter().flatten().flatten().any(Term::has_codiff);
            if live {
                None
            } else {
                Some(m.strong_sparse(ops)?.max_abs())
            }
        }
        _ => None,
    };
    let symmetry_defect = if kind == OperatorKind::SpecialLegendrian {
        let w = d1.weighted(ops)?;
        Some(w.w0.symmetry_defect())
    } else {
        None
    };
    Ok(AssembledOperator { kind, kappa, d1, d2, complex_defect, symmetry_defect })
}

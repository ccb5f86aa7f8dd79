//! Oriented simplicial complexes of closed 1- and 2-manifolds.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::rank::rank_mod_p;
use crate::linalg::Csr;

/// Simplex tables for degrees `0..=dim` with signed boundary incidence.
///
/// The tuple order of each stored simplex is its orientation. Top simplices must be
/// coherently oriented: every `(dim−1)`-simplex is a face of exactly two top simplices
/// with opposite induced signs.
#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    dim: usize,
    simplices: Vec<Vec<Vec<usize>>>,
    /// `faces[k][s]`: faces of the k-simplex `s` as `(index of (k−1)-simplex, sign)`; empty for k = 0.
    faces: Vec<Vec<Vec<(usize, i8)>>>,
    orientation: Vec<i8>,
    lookup: Vec<HashMap<Vec<usize>, usize>>,
}

impl PartialEq for SimplicialComplex {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.simplices == other.simplices
    }
}

/// Parity (+1/−1) of the permutation taking `a` to `b` (same vertex sets).
fn parity(a: &[usize], b: &[usize]) -> i8 {
    let pos: Vec<usize> = a.iter().map(|v| b.iter().position(|w| w == v).unwrap()).collect();
    let mut seen = vec![false; pos.len()];
    let mut sign = 1i8;
    for i in 0..pos.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = pos[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn sorted(s: &[usize]) -> Vec<usize> {
    let mut k = s.to_vec();
    k.sort_unstable();
    k
}

impl SimplicialComplex {
    /// Builds a complex from explicit tables: `tables[k−1]` lists the k-simplices for `k = 1..=dim`.
    pub fn from_tables(dim: usize, n_vertices: usize, tables: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidMesh(format!("dimension {dim} not supported (1 or 2)")));
        }
        if tables.len() != dim {
            return Err(Error::InvalidMesh(format!("expected {dim} simplex tables, got {}", tables.len())));
        }
        if n_vertices == 0 {
            return Err(Error::InvalidMesh("no vertices".into()));
        }
        let mut simplices = vec![(0..n_vertices).map(|v| vec![v]).collect::<Vec<_>>()];
        simplices.extend(tables);
        let mut lookup = vec![HashMap::new()];
        for (v, s) in simplices[0].iter().enumerate() {
            lookup[0].insert(s.clone(), v);
        }
        for k in 1..=dim {
            let mut map = HashMap::new();
            for (i, s) in simplices[k].iter().enumerate() {
                if s.len() != k + 1 {
                    return Err(Error::InvalidMesh(format!("{k}-simplex {i} has {} vertices", s.len())));
                }
                if s.iter().any(|&v| v >= n_vertices) {
                    return Err(Error::InvalidMesh(format!("{k}-simplex {i} references a missing vertex")));
                }
                let key = sorted(s);
                if key.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidMesh(format!("{k}-simplex {i} repeats a vertex")));
                }
                if map.insert(key, i).is_some() {
                    return Err(Error::InvalidMesh(format!("{k}-simplex {i} is duplicated")));
                }
            }
            lookup.push(map);
        }
        let mut faces = vec![vec![Vec::new(); n_vertices]];
        for k in 1..=dim {
            let mut fk = Vec::with_capacity(simplices[k].len());
            for (i, s) in simplices[k].iter().enumerate() {
                let mut f = Vec::with_capacity(k + 1);
                for j in 0..=k {
                    let face: Vec<usize> = s.iter().enumerate().filter(|&(t, _)| t != j).map(|(_, &v)| v).collect();
                    let idx = *lookup[k - 1].get(&sorted(&face)).ok_or_else(|| {
                        Error::InvalidMesh(format!("face {face:?} of {k}-simplex {i} is missing"))
                    })?;
                    let base: i8 = if j % 2 == 0 { 1 } else { -1 };
                    f.push((idx, base * parity(&face, &simplices[k - 1][idx])));
                }
                fk.push(f);
            }
            faces.push(fk);
        }
        let c = SimplicialComplex {
            dim,
            orientation: vec![1; simplices[dim].len()],
            simplices,
            faces,
            lookup,
        };
        c.check_manifold()?;
        if !c.boundary_squares_vanish() {
            return Err(Error::InvalidMesh("boundary of boundary is nonzero".into()));
        }
        Ok(c)
    }

    fn check_manifold(&self) -> Result<()> {
        let n = self.dim;
        let mut inc: Vec<Vec<i8>> = vec![Vec::new(); self.n_simplices(n - 1)];
        for f in &self.faces[n] {
            for &(i, s) in f {
                inc[i].push(s);
            }
        }
        for (i, signs) in inc.iter().enumerate() {
            if signs.len() != 2 || signs[0] + signs[1] != 0 {
                return Err(Error::InvalidMesh(format!(
                    "{}-simplex {i} is not shared by two oppositely oriented top simplices",
                    n - 1
                )));
            }
        }
        Ok(())
    }

    /// Integer check `∂_k ∘ ∂_{k+1} = 0` for all k.
    pub fn boundary_squares_vanish(&self) -> bool {
        for k in 2..=self.dim {
            for f in &self.faces[k] {
                let mut acc: HashMap<usize, i32> = HashMap::new();
                for &(e, s) in f {
                    for &(v, t) in &self.faces[k - 1][e] {
                        *acc.entry(v).or_insert(0) += (s as i32) * (t as i32);
                    }
                }
                if acc.values().any(|&x| x != 0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.simplices[0].len()
    }

    pub fn n_simplices(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, |s| s.len())
    }

    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        &self.simplices[k]
    }

    pub fn faces(&self, k: usize, s: usize) -> &[(usize, i8)] {
        &self.faces[k][s]
    }

    pub fn orientation(&self) -> &[i8] {
        &self.orientation
    }

    /// Index and relative sign of the stored simplex with the given vertex tuple.
    pub fn find(&self, tuple: &[usize]) -> Option<(usize, i8)> {
        let k = tuple.len().checked_sub(1)?;
        let idx = *self.lookup.get(k)?.get(&sorted(tuple))?;
        Some((idx, parity(tuple, &self.simplices[k][idx])))
    }

    /// Same complex with every top simplex reversed.
    pub fn reversed(&self) -> SimplicialComplex {
        let mut tables: Vec<Vec<Vec<usize>>> = self.simplices[1..].to_vec();
        for s in tables[self.dim - 1].iter_mut() {
            s.swap(0, 1);
        }
        SimplicialComplex::from_tables(self.dim, self.n_vertices(), tables).expect("reversal preserves validity")
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim).map(|k| if k % 2 == 0 { 1 } else { -1 } * self.n_simplices(k) as i64).sum()
    }

    /// Coboundary `d_k : C^k → C^{k+1}` (transpose of `∂_{k+1}`); rows indexed by (k+1)-simplices.
    pub fn coboundary(&self, k: usize) -> Csr {
        let nk = self.n_simplices(k);
        if k >= self.dim {
            return Csr::zeros(0, nk);
        }
        let mut t = Vec::new();
        for (s, f) in self.faces[k + 1].iter().enumerate() {
            for &(i, sign) in f {
                t.push((s, i, sign as f64));
            }
        }
        Csr::from_triplets(self.n_simplices(k + 1), nk, &t)
    }

    /// Rank of `∂_k` over the rationals (k = 1..=dim).
    pub fn boundary_rank(&self, k: usize) -> usize {
        if k == 0 || k > self.dim {
            return 0;
        }
        let rows: Vec<Vec<(usize, i64)>> =
            self.faces[k].iter().map(|f| f.iter().map(|&(i, s)| (i, s as i64)).collect()).collect();
        rank_mod_p(&rows)
    }

    /// Betti numbers `b_k = n_k − rank ∂_k − rank ∂_{k+1}`.
    pub fn betti_numbers(&self) -> Vec<usize> {
        let ranks: Vec<usize> = (0..=self.dim + 1).map(|k| self.boundary_rank(k)).collect();
        (0..=self.dim).map(|k| self.n_simplices(k) - ranks[k] - ranks[k + 1]).collect()
    }

    /// Sorted vertex neighbours from the edge table.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n_vertices()];
        for e in &self.simplices[1] {
            nb[e[0]].push(e[1]);
            nb[e[1]].push(e[0]);
        }
        for l in nb.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    /// Top simplices incident to each vertex.
    pub fn vertex_stars(&self) -> Vec<Vec<usize>> {
        let mut st = vec![Vec::new(); self.n_vertices()];
        for (t, s) in self.simplices[self.dim].iter().enumerate() {
            for &v in s {
                st[v].push(t);
            }
        }
        st
    }
}

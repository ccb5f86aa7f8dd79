//! Shift-invert subspace iteration with Rayleigh–Ritz for symmetric-definite pencils.
//!
//! Finds every eigenpair of `A x = λ B x` inside a window `|λ − σ| ≤ w` around a shift `σ`.
//! The block grows until the first Ritz pair outside the window has converged, so the
//! count is certified up to the residual tolerance.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::{b_orthonormalize, dot, norm2, sym_eigen};
use crate::error::{Error, Result};

/// A symmetric pencil `(A, B)` with `B` positive definite on the iteration space.
pub trait Pencil {
    fn dim(&self) -> usize;
    fn apply_a(&self, x: &[f64]) -> Vec<f64>;
    fn apply_b(&self, x: &[f64]) -> Vec<f64>;
    fn solve_b(&self, x: &[f64]) -> Vec<f64>;
    /// Returns `x ↦ (A − σB)⁻¹ x`.
    fn shift_invert(&self, shift: f64) -> Result<Box<dyn Fn(&[f64]) -> Vec<f64> + '_>>;
}

#[derive(Clone, Debug)]
pub struct IterOptions {
    pub max_iter: usize,
    /// Relative residual tolerance `‖Ax − λBx‖ ≤ tol · ‖B⁻¹A‖ · ‖Bx‖`.
    pub tol: f64,
    pub seed: u64,
    pub block: usize,
    pub max_block: usize,
}

impl Default for IterOptions {
    fn default() -> Self {
        IterOptions { max_iter: 400, tol: 1e-10, seed: 0x5a5a_2024, block: 12, max_block: 96 }
    }
}

/// Estimates the largest eigenvalue magnitude of `B⁻¹A` by power iteration.
pub fn spectral_radius(p: &dyn Pencil, iters: usize, seed: u64) -> f64 {
    let n = p.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut lam = 0.0;
    for _ in 0..iters {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = p.apply_a(&x);
        let bx = p.apply_b(&x);
        let q = dot(&x, &bx);
        if q > 0.0 {
            lam = (dot(&x, &ax) / q).abs().max(lam);
        }
        x = p.solve_b(&ax);
    }
    lam
}

/// Eigenpairs of the pencil within `|λ − center| ≤ halfwidth`, sorted by λ, B-orthonormal.
pub fn eigs_window(
    p: &dyn Pencil,
    center: f64,
    halfwidth: f64,
    opts: &IterOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = p.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let anorm = spectral_radius(p, 30, opts.seed ^ 0x77).max(1e-300);
    // shift slightly off the centre so an eigenvalue sitting exactly on it does not make the
    // shifted operator singular
    let mut offsets = [1e-3, -2.7e-3, 7.1e-3].iter();
    let solve = loop {
        let off = match offsets.next() {
            Some(o) => o,
            None => {
                return Err(Error::Solver { iterations: 0, message: "shifted factorization failed".into() })
            }
        };
        let shift = center - off * halfwidth.max(1e-8 * anorm);
        if let Ok(s) = p.shift_invert(shift) {
            break s;
        }
    };
    let mut block = opts.block.min(n).max(1);
    loop {
        match subspace(p, &*solve, center, halfwidth, block, anorm, opts)? {
            Some(pairs) => return Ok(pairs),
            None => {
                if block >= n || block >= opts.max_block {
                    return Err(Error::Solver {
                        iterations: opts.max_iter,
                        message: format!("more than {block} eigenvalues inside the window"),
                    });
                }
                block = (block * 2).min(n).min(opts.max_block);
            }
        }
    }
}

/// One subspace-iteration run. `Ok(None)` means the block was filled by wanted pairs.
fn subspace(
    p: &dyn Pencil,
    solve: &dyn Fn(&[f64]) -> Vec<f64>,
    center: f64,
    halfwidth: f64,
    block: usize,
    anorm: f64,
    opts: &IterOptions,
) -> Result<Option<Vec<(f64, Vec<f64>)>>> {
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(block as u64));
    let rand_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(rng)).collect() };
    let bop = |v: &[f64]| p.apply_b(v);
    let mut x: Vec<Vec<f64>> = (0..block).map(|_| rand_vec(&mut rng)).collect();
    x = b_orthonormalize(&x, &bop, 1e-10);
    let mut last_res = f64::INFINITY;
    for it in 0..opts.max_iter {
        let y: Vec<Vec<f64>> = x.iter().map(|v| solve(&p.apply_b(v))).collect();
        let mut q = b_orthonormalize(&y, &bop, 1e-12);
        while q.len() < block {
            let mut extra = q.clone();
            extra.push(rand_vec(&mut rng));
            q = b_orthonormalize(&extra, &bop, 1e-12);
        }
        let k = q.len();
        let aq: Vec<Vec<f64>> = q.iter().map(|v| p.apply_a(v)).collect();
        let g = Mat::from_fn(k, k, |i, j| 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i])));
        let (theta, s) = sym_eigen(&g)?;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            (theta[a] - center).abs().partial_cmp(&(theta[b] - center).abs()).unwrap().then(a.cmp(&b))
        });
        let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(k);
        for &j in &order {
            let mut v = vec![0.0; n];
            let mut av = vec![0.0; n];
            for i in 0..k {
                let c = s[(i, j)];
                for t in 0..n {
                    v[t] += c * q[i][t];
                    av[t] += c * aq[i][t];
                }
            }
            let bv = p.apply_b(&v);
            let r: Vec<f64> = av.iter().zip(&bv).map(|(a, b)| a - theta[j] * b).collect();
            let res = norm2(&r) / (anorm * norm2(&bv)).max(1e-300);
            pairs.push((theta[j], v, res));
        }
        // certified when a prefix (by distance) converged and ends with a pair outside the window
        let mut done = None;
        let mut max_res = 0.0f64;
        for (idx, (th, _, res)) in pairs.iter().enumerate() {
            max_res = max_res.max(*res);
            if *res > opts.tol {
                break;
            }
            if (th - center).abs() > halfwidth {
                done = Some(idx);
                break;
            }
        }
        if let Some(m) = done {
            let mut out: Vec<(f64, Vec<f64>)> = pairs.into_iter().take(m).map(|(t, v, _)| (t, v)).collect();
            out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            return Ok(Some(out));
        }
        let all_conv_wanted = pairs.iter().all(|(th, _, res)| *res <= opts.tol && (th - center).abs() <= halfwidth);
        if all_conv_wanted {
            if block >= n {
                let mut out: Vec<(f64, Vec<f64>)> = pairs.into_iter().map(|(t, v, _)| (t, v)).collect();
                out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                return Ok(Some(out));
            }
            return Ok(None);
        }
        last_res = max_res;
        x = pairs.into_iter().map(|(_, v, _)| v).collect();
        let _ = it;
    }
    Err(Error::Solver {
        iterations: opts.max_iter,
        message: format!("subspace iteration did not converge (residual {last_res:.3e})"),
    })
}

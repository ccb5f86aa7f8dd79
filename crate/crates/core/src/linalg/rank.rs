//! Exact rank of small-integer sparse matrices by elimination modulo a large prime.

use std::collections::BTreeMap;

const P: i64 = 2_147_483_647;

fn inv(a: i64) -> i64 {
    // Fermat inverse
    let mut r = 1i64;
    let mut b = a.rem_euclid(P);
    let mut e = P - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % P;
        }
        b = b * b % P;
        e >>= 1;
    }
    r
}

/// Rank over GF(p) of a matrix given as sparse rows of `(column, value)` pairs.
/// For ±1 incidence matrices of orientable manifolds this equals the rational rank.
pub fn rank_mod_p(rows: &[Vec<(usize, i64)>]) -> usize {
    let mut pivots: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
    for row in rows {
        let mut r: Vec<(usize, i64)> =
            row.iter().map(|&(c, v)| (c, v.rem_euclid(P))).filter(|e| e.1 != 0).collect();
        r.sort_by_key(|e| e.0);
        loop {
            let Some(&(lead, lv)) = r.first() else { break };
            match pivots.get(&lead) {
                None => {
                    // normalize so the leading entry is 1
                    let s = inv(lv);
                    for e in r.iter_mut() {
                        e.1 = e.1 * s % P;
                    }
                    pivots.insert(lead, r);
                    break;
                }
                Some(pr) => {
                    r = sub_scaled(&r, pr, lv);
                }
            }
        }
    }
    pivots.len()
}

/// `a − s·b` for sorted sparse rows.
fn sub_scaled(a: &[(usize, i64)], b: &[(usize, i64)], s: i64) -> Vec<(usize, i64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i]);
            i += 1;
        } else if take_b {
            let v = (P - s * b[j].1 % P) % P;
            if v != 0 {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = (a[i].1 - s * b[j].1 % P).rem_euclid(P);
            if v != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

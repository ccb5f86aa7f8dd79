//! Weighted Sasaki structures on `S^{2n+1} ⊂ ℂ^{n+1}` and their cones.
//!
//! Coordinates are real, `z_k = x[2k] + i x[2k+1]`, and `J` is multiplication by `i`.
//! A structure of weight `κ > 0` is the D-homothetic transform of the round Sasaki–Einstein
//! structure by `s = (n+1)/κ`:
//! `η = s⟨Jx, dx⟩/r²`, `ξ = Jx/s`, `ω^T = ½dη`, `ψ = s^{n/2} e^{iθ} Ω₀(x, ·)/r^{n+1}` with
//! `Ω₀ = dz₁∧⋯∧dz_{n+1}`. The forms are extended off the sphere homogeneously of degree 0.
//! On the cone, `Ω = (dr/r + iη) ∧ r^κ ψ` and `ω = ½d(r²η) = s ω_std`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer to the origin than this are rejected.
const MIN_RADIUS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientStructure {
    pub n: usize,
    pub kappa: f64,
    pub theta: f64,
    /// D-homothety factor relative to the round structure, `s = (n+1)/κ`.
    pub scale: f64,
}

/// `⟨Ju, v⟩` with `J` multiplication by `i`.
pub fn j_inner(u: &[f64], v: &[f64]) -> f64 {
    u.chunks(2).zip(v.chunks(2)).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).sum()
}

/// `J x`.
pub fn j_apply(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for k in 0..x.len() / 2 {
        out[2 * k] = -x[2 * k + 1];
        out[2 * k + 1] = x[2 * k];
    }
    out
}

fn dotr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Complex determinant by cofactor expansion along the first row (m ≤ 4).
pub fn cdet(m: &[Vec<Complex64>]) -> Complex64 {
    let k = m.len();
    match k {
        0 => Complex64::new(1.0, 0.0),
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..k {
                let minor: Vec<Vec<Complex64>> =
                    m[1..].iter().map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, v)| *v).collect()).collect();
                let t = m[0][j] * cdet(&minor);
                acc += if j % 2 == 0 { t } else { -t };
            }
            acc
        }
    }
}

/// `dz₁∧⋯∧dz_{n+1}(w₁, …, w_{n+1}) = det[z_k(w_j)]`.
pub fn omega0(w: &[&[f64]]) -> Complex64 {
    let m = w.len();
    let rows: Vec<Vec<Complex64>> =
        (0..m).map(|j| (0..m).map(|k| Complex64::new(w[j][2 * k], w[j][2 * k + 1])).collect()).collect();
    cdet(&rows)
}

/// `c_n = (1/n!)(−1)^{n(n−1)/2}(2/i)^n`.
pub fn c_n(n: usize) -> Complex64 {
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let sign = if (n * (n.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::new(0.0, -2.0).powi(n as i32) * (sign / fact)
}

impl AmbientStructure {
    /// Structure of weight `κ > 0` and phase `θ` on `S^{2n+1}`.
    pub fn new(n: usize, kappa: f64, theta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Parameter(format!(
                "a weighted structure on the sphere needs finite κ > 0, got {kappa}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::Parameter("phase must be finite".into()));
        }
        Ok(AmbientStructure { n, kappa, theta, scale: (n as f64 + 1.0) / kappa })
    }

    /// Round Sasaki–Einstein structure `κ = n + 1`.
    pub fn sasaki_einstein(n: usize, theta: f64) -> Result<Self> {
        Self::new(n, n as f64 + 1.0, theta)
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        AmbientStructure { theta, ..*self }
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.n + 2
    }

    /// D-homothety by `a > 0`: `η ↦ aη`, `ξ ↦ ξ/a`, `ψ ↦ a^{n/2}ψ`, `κ ↦ κ/a`.
    pub fn d_homothety(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Parameter(format!("homothety factor must be positive, got {a}")));
        }
        Ok(AmbientStructure { n: self.n, kappa: self.kappa / a, theta: self.theta, scale: self.scale * a })
    }

    fn radius(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.ambient_dim() {
            return Err(Error::Dimension(format!("point has {} coordinates, expected {}", x.len(), self.ambient_dim())));
        }
        let r = dotr(x, x).sqrt();
        if !(r > MIN_RADIUS) {
            return Err(Error::Domain(format!("point at radius {r} is too close to the cone vertex")));
        }
        Ok(r)
    }

    pub fn r(&self, x: &[f64]) -> Result<f64> {
        self.radius(x)
    }

    /// `η_x(v) = s⟨Jx, v⟩/r²`.
    pub fn eta(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let r = self.radius(x)?;
        Ok(self.scale * j_inner(x, v) / (r * r))
    }

    /// Reeb field `ξ = Jx/s`.
    pub fn xi(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.radius(x)?;
        Ok(j_apply(x).into_iter().map(|v| v / self.scale).collect())
    }

    /// `ω^T(u, v) = ½dη(u, v)`.
    pub fn omega_t(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let r = self.radius(x)?;
        let r2 = r * r;
        let t = j_inner(u, v) - (dotr(x, u) * j_inner(x, v) - dotr(x, v) * j_inner(x, u)) / r2;
        Ok(self.scale * t / r2)
    }

    /// Phase factor `s^{n/2} e^{iθ}`.
    pub fn psi_factor(&self) -> Complex64 {
        Complex64::from_polar(self.scale.powf(self.n as f64 / 2.0), self.theta)
    }

    /// `ψ_x(v₁, …, v_n) = s^{n/2} e^{iθ} Ω₀(x, v₁, …, v_n)/r^{n+1}`.
    pub fn psi(&self, x: &[f64], v: &[&[f64]]) -> Result<Complex64> {
        if v.len() != self.n {
            return Err(Error::Dimension(format!("ψ takes {} vectors, got {}", self.n, v.len())));
        }
        let r = self.radius(x)?;
        let mut w: Vec<&[f64]> = Vec::with_capacity(self.n + 1);
        w.push(x);
        w.extend_from_slice(v);
        Ok(self.psi_factor() * omega0(&w) / r.powi(self.n as i32 + 1))
    }

    /// Cone Kähler form `ω = ½d(r²η) = s⟨Ju, v⟩`.
    pub fn omega_cone(&self, u: &[f64], v: &[f64]) -> f64 {
        self.scale * j_inner(u, v)
    }

    /// `Ω_x(v₀, …, v_n) = ((dr/r + iη) ∧ r^κ ψ)(v₀, …, v_n)`.
    pub fn big_omega(&self, x: &[f64], v: &[&[f64]]) -> Result<Complex64> {
        if v.len() != self.n + 1 {
            return Err(Error::Dimension(format!("Ω takes {} vectors, got {}", self.n + 1, v.len())));
        }
        let r = self.radius(x)?;
        let rk = r.powf(self.kappa);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..v.len() {
            let one = Complex64::new(dotr(x, v[j]) / (r * r), self.eta(x, v[j])?);
            let rest: Vec<&[f64]> = v.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, w)| *w).collect();
            let t = one * rk * self.psi(x, &rest)?;
            acc += if j % 2 == 0 { t } else { -t };
        }
        Ok(acc)
    }
}

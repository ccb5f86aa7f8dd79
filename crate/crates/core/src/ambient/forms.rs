//! Multilinear forms as evaluators, wedge products by shuffle sums, and finite-difference
//! exterior derivatives of form fields.

use num_complex::Complex64;

/// A k-form at a fixed point, evaluated on k vectors.
pub struct Form<'a> {
    pub degree: usize,
    f: Box<dyn Fn(&[&[f64]]) -> Complex64 + 'a>,
}

impl<'a> Form<'a> {
    pub fn new(degree: usize, f: impl Fn(&[&[f64]]) -> Complex64 + 'a) -> Self {
        Form { degree, f: Box::new(f) }
    }

    pub fn eval(&self, v: &[&[f64]]) -> Complex64 {
        debug_assert_eq!(v.len(), self.degree);
        (self.f)(v)
    }

    pub fn conj(self) -> Form<'a> {
        let Form { degree, f } = self;
        Form::new(degree, move |v| f(v).conj())
    }

    pub fn scale(self, c: Complex64) -> Form<'a> {
        let Form { degree, f } = self;
        Form::new(degree, move |v| c * f(v))
    }
}

/// Increasing subsets of `0..m` of size `p`, each with the sign of the shuffle `(S, Sᶜ)`.
pub fn shuffles(m: usize, p: usize) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut s = Vec::with_capacity(p);
    fn rec(m: usize, p: usize, start: usize, s: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Vec<usize>, f64)>) {
        if s.len() == p {
            let c: Vec<usize> = (0..m).filter(|i| !s.contains(i)).collect();
            // inversions: pairs (a in S, b in Sᶜ) with b < a
            let inv: usize = s.iter().map(|&a| c.iter().filter(|&&b| b < a).count()).sum();
            out.push((s.clone(), c, if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for i in start..m {
            s.push(i);
            rec(m, p, i + 1, s, out);
            s.pop();
        }
    }
    rec(m, p, 0, &mut s, &mut out);
    out
}

/// `α ∧ β` with the convention `(α∧β)(v) = Σ_shuffles sgn α(v_S) β(v_Sᶜ)`.
pub fn wedge<'a>(a: Form<'a>, b: Form<'a>) -> Form<'a> {
    let (p, q) = (a.degree, b.degree);
    let sh = shuffles(p + q, p);
    Form::new(p + q, move |v: &[&[f64]]| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, c, sign) in &sh {
            let vs: Vec<&[f64]> = s.iter().map(|&i| v[i]).collect();
            let vc: Vec<&[f64]> = c.iter().map(|&i| v[i]).collect();
            acc += *sign * a.eval(&vs) * b.eval(&vc);
        }
        acc
    })
}

/// Central-difference exterior derivative of a form field at `x`:
/// `dα(v₀..v_k) ≈ Σᵢ (−1)ⁱ [α_{x+hvᵢ} − α_{x−hvᵢ}](…v̂ᵢ…) / 2h`.
pub fn fd_exterior_derivative(
    field: &dyn Fn(&[f64], &[&[f64]]) -> Complex64,
    x: &[f64],
    v: &[&[f64]],
    h: f64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..v.len() {
        let rest: Vec<&[f64]> = v.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| *w).collect();
        let xp: Vec<f64> = x.iter().zip(v[i]).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(v[i]).map(|(a, b)| a - h * b).collect();
        let diff = (field(&xp, &rest) - field(&xm, &rest)) / (2.0 * h);
        acc += if i % 2 == 0 { diff } else { -diff };
    }
    acc
}

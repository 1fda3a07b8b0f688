use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const MAX_ORDER: usize = 4;
pub const MAX_VARS: usize = 8;

/// Monomial ordering and product table for one `(nvars, order)` pair.
#[derive(Debug)]
pub struct Layout {
    pub nvars: usize,
    pub order: usize,
    exps: Vec<Vec<u8>>,
    degree_start: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    // (i, j, k): coefficient i times coefficient j lands in k
    mul: Vec<(u32, u32, u32)>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(exps.len());
            let mut cur = vec![0u8; nvars];
            push_degree(&mut exps, &mut cur, 0, d);
        }
        degree_start.push(exps.len());
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut mul = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            let da: usize = a.iter().map(|&v| v as usize).sum();
            for (j, b) in exps.iter().enumerate() {
                let db: usize = b.iter().map(|&v| v as usize).sum();
                if da + db > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(p, q)| p + q).collect();
                mul.push((i as u32, j as u32, index[&s] as u32));
            }
        }
        Layout { nvars, order, exps, degree_start, index, mul }
    }

    /// Shared layout for `(nvars, order)`.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn position(&self, mu: &[usize]) -> Option<usize> {
        if mu.len() != self.nvars {
            return None;
        }
        let key: Vec<u8> = mu.iter().map(|&m| m as u8).collect();
        self.index.get(&key).copied()
    }

    /// Index range of monomials of total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, var: usize, remaining: usize) {
    if var + 1 == cur.len() {
        cur[var] = remaining as u8;
        out.push(cur.clone());
        cur[var] = 0;
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        push_degree(out, cur, var + 1, remaining - k);
    }
    cur[var] = 0;
}

/// Truncated Taylor polynomial; `c[i]` multiplies `h^mu_i` (so `c = D^mu f / mu!`).
#[derive(Clone, Debug)]
pub(crate) struct Taylor {
    pub layout: Arc<Layout>,
    pub c: Vec<f64>,
}

impl Taylor {
    pub fn constant(layout: &Arc<Layout>, v: f64) -> Taylor {
        let mut c = vec![0.0; layout.len()];
        c[0] = v;
        Taylor { layout: layout.clone(), c }
    }

    pub fn zero(layout: &Arc<Layout>) -> Taylor {
        Taylor { layout: layout.clone(), c: vec![0.0; layout.len()] }
    }

    pub fn variable(layout: &Arc<Layout>, var: usize, x0: f64) -> Taylor {
        let mut t = Taylor::constant(layout, x0);
        if layout.order >= 1 {
            let mut mu = vec![0usize; layout.nvars];
            mu[var] = 1;
            let k = layout.position(&mu).expect("first-order monomial exists");
            t.c[k] = 1.0;
        }
        t
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    pub fn add_assign(&mut self, o: &Taylor) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += b;
        }
    }

    pub fn scale(&self, s: f64) -> Taylor {
        Taylor { layout: self.layout.clone(), c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn mul(&self, o: &Taylor) -> Taylor {
        let mut out = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.layout.mul {
            out[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Taylor { layout: self.layout.clone(), c: out }
    }

    /// `sum_k f[k] (self - self(0))^k`, i.e. composition with a univariate
    /// function whose Taylor coefficients at `self.value()` are `f`.
    pub fn compose(&self, f: &[f64]) -> Taylor {
        let order = self.layout.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut r = Taylor::constant(&self.layout, f[order]);
        for k in (0..order).rev() {
            r = r.mul(&h);
            r.c[0] += f[k];
        }
        r
    }
}

pub(crate) type Coeffs = [f64; MAX_ORDER + 1];

pub(crate) fn exp_coeffs(a: f64) -> Coeffs {
    let e = a.exp();
    [e, e, e / 2.0, e / 6.0, e / 24.0]
}

pub(crate) fn ln_coeffs(a: f64) -> Coeffs {
    let r = 1.0 / a;
    [a.ln(), r, -r * r / 2.0, r * r * r / 3.0, -r * r * r * r / 4.0]
}

/// Coefficients of `u^s` at `u = a`; binomial series.
pub(crate) fn pow_coeffs(a: f64, s: f64) -> Coeffs {
    let mut out = [0.0; MAX_ORDER + 1];
    let mut binom = 1.0;
    for (k, o) in out.iter_mut().enumerate() {
        if k > 0 {
            binom *= (s - (k as f64 - 1.0)) / k as f64;
        }
        *o = if binom == 0.0 { 0.0 } else { binom * a.powf(s - k as f64) };
    }
    out
}

/// Coefficients of `u^n` at `u = a` for integer `n`; exact at `a = 0` when `n >= 0`.
pub(crate) fn powi_coeffs(a: f64, n: i32) -> Coeffs {
    let mut out = [0.0; MAX_ORDER + 1];
    let mut binom = 1.0;
    for (k, o) in out.iter_mut().enumerate() {
        if k > 0 {
            binom *= (n as f64 - (k as f64 - 1.0)) / k as f64;
        }
        if binom == 0.0 {
            *o = 0.0;
            continue;
        }
        let e = n - k as i32;
        *o = binom * if e == 0 { 1.0 } else { a.powi(e) };
    }
    out
}

pub(crate) fn recip_coeffs(a: f64) -> Coeffs {
    let r = 1.0 / a;
    [r, -r * r, r * r * r, -r * r * r * r, r * r * r * r * r]
}

pub(crate) fn sin_coeffs(a: f64) -> Coeffs {
    let (s, c) = a.sin_cos();
    [s, c, -s / 2.0, -c / 6.0, s / 24.0]
}

pub(crate) fn cos_coeffs(a: f64) -> Coeffs {
    let (s, c) = a.sin_cos();
    [c, -s, -c / 2.0, s / 6.0, c / 24.0]
}

fn univariate(order: usize, t0: f64) -> Taylor {
    Taylor::variable(&Layout::get(1, order), 0, t0)
}

fn pad(t: &Taylor) -> Coeffs {
    let mut out = [0.0; MAX_ORDER + 1];
    out[..t.c.len()].copy_from_slice(&t.c);
    out
}

/// Coefficients of `exp(-c |t|^(-k))` at `t0`; identically zero at `t0 = 0`
/// and wherever the value underflows.
pub(crate) fn flat_coeffs(t0: f64, c: f64, k: f64, order: usize) -> Coeffs {
    if t0 == 0.0 {
        return [0.0; MAX_ORDER + 1];
    }
    let t = univariate(order, t0);
    let abs_t = if t0 < 0.0 { t.scale(-1.0) } else { t };
    let u = abs_t.compose(&pow_coeffs(t0.abs(), -k)).scale(-c);
    if u.value().exp() == 0.0 {
        return [0.0; MAX_ORDER + 1];
    }
    let e = u.compose(&exp_coeffs(u.value()));
    if !e.is_finite() {
        return [0.0; MAX_ORDER + 1];
    }
    pad(&e)
}

/// Coefficients of `exp(1 - 1/(1-u^2))` at `u0`, zero outside `(-1, 1)`.
pub(crate) fn bump_coeffs(u0: f64, order: usize) -> Coeffs {
    if u0.abs() >= 1.0 {
        return [0.0; MAX_ORDER + 1];
    }
    let u = univariate(order, u0);
    let mut q = u.mul(&u).scale(-1.0);
    q.c[0] += 1.0;
    let mut w = q.compose(&recip_coeffs(q.value())).scale(-1.0);
    w.c[0] += 1.0;
    if w.value().exp() == 0.0 {
        return [0.0; MAX_ORDER + 1];
    }
    let e = w.compose(&exp_coeffs(w.value()));
    if !e.is_finite() {
        return [0.0; MAX_ORDER + 1];
    }
    pad(&e)
}

/// Exact mixed partials of a scalar expression at a point, up to a fixed order.
#[derive(Clone, Debug)]
pub struct Jet4 {
    point: Vec<f64>,
    taylor: Taylor,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet4 {
    pub(crate) fn new(point: Vec<f64>, taylor: Taylor) -> Jet4 {
        Jet4 { point, taylor }
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.taylor.layout.order
    }

    pub fn nvars(&self) -> usize {
        self.taylor.layout.nvars
    }

    pub fn value(&self) -> f64 {
        self.taylor.value()
    }

    /// Taylor coefficient `D^mu f / mu!`; `None` above the evaluated order.
    pub fn coefficient(&self, mu: &[usize]) -> Option<f64> {
        self.taylor.layout.position(mu).map(|i| self.taylor.c[i])
    }

    /// Mixed partial `D^mu f`; `None` above the evaluated order.
    pub fn partial(&self, mu: &[usize]) -> Option<f64> {
        let scale: f64 = mu.iter().map(|&m| factorial(m)).product();
        self.coefficient(mu).map(|c| c * scale)
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars())
            .map(|i| {
                let mut mu = vec![0; self.nvars()];
                mu[i] = 1;
                self.partial(&mu).unwrap_or(0.0)
            })
            .collect()
    }

    /// Every multiindex up to the evaluated order with its partial.
    pub fn entries(&self) -> Vec<(Vec<usize>, f64)> {
        let l = &self.taylor.layout;
        (0..l.len())
            .map(|i| {
                let mu: Vec<usize> = l.exponents(i).iter().map(|&v| v as usize).collect();
                let scale: f64 = mu.iter().map(|&m| factorial(m)).product();
                (mu, self.taylor.c[i] * scale)
            })
            .collect()
    }

    /// Partials of total degree `d`, paired with their multiindices.
    pub fn degree(&self, d: usize) -> Vec<(Vec<usize>, f64)> {
        let l = &self.taylor.layout;
        if d > l.order {
            return Vec::new();
        }
        l.degree_range(d)
            .map(|i| {
                let mu: Vec<usize> = l.exponents(i).iter().map(|&v| v as usize).collect();
                let scale: f64 = mu.iter().map(|&m| factorial(m)).product();
                (mu, self.taylor.c[i] * scale)
            })
            .collect()
    }

    /// Frobenius norm of the symmetric tensor of `d`-th derivatives
    /// (each distinct partial weighted by its multiplicity `d!/mu!`).
    pub fn tensor_norm(&self, d: usize) -> f64 {
        let fd = factorial(d);
        self.degree(d)
            .iter()
            .map(|(mu, v)| {
                let mult = fd / mu.iter().map(|&m| factorial(m)).product::<f64>();
                mult * v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute partial of total degree `d`.
    pub fn max_abs(&self, d: usize) -> f64 {
        self.degree(d).iter().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Truncated product of two jets taken at the same point.
    pub fn mul(&self, other: &Jet4) -> Jet4 {
        assert_eq!(self.nvars(), other.nvars(), "jets over different variable counts");
        assert_eq!(self.order(), other.order(), "jets of different orders");
        Jet4 { point: self.point.clone(), taylor: self.taylor.mul(&other.taylor) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes_are_binomial() {
        // number of monomials of degree <= d in n variables is C(n+d, d)
        assert_eq!(Layout::get(1, 4).len(), 5);
        assert_eq!(Layout::get(2, 2).len(), 6);
        assert_eq!(Layout::get(3, 4).len(), 35);
        assert_eq!(Layout::get(8, 4).len(), 495);
        assert_eq!(Layout::get(4, 0).len(), 1);
    }

    #[test]
    fn compose_exp_of_variable() {
        let t = Taylor::variable(&Layout::get(1, 4), 0, 0.0);
        let e = t.compose(&exp_coeffs(0.0));
        for (k, v) in e.c.iter().enumerate() {
            assert!((v - 1.0 / factorial(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn powi_at_zero_is_exact() {
        assert_eq!(powi_coeffs(0.0, 2), [0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(powi_coeffs(0.0, 4), [0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn flat_vanishes_at_origin_and_underflow() {
        assert_eq!(flat_coeffs(0.0, 1.0, 2.0, 4), [0.0; 5]);
        assert_eq!(flat_coeffs(1e-3, 1.0, 2.0, 4), [0.0; 5]);
        let c = flat_coeffs(0.5, 1.0, 2.0, 4);
        assert!((c[0] - (-4.0f64).exp()).abs() < 1e-16);
        // d/dt exp(-1/t^2) = 2 t^-3 exp(-1/t^2)
        assert!((c[1] - 16.0 * (-4.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn bump_value_at_center() {
        let c = bump_coeffs(0.0, 4);
        assert_eq!(c[0], 1.0);
        assert_eq!(c[1], 0.0);
        // exp(1 - 1/(1-u^2)) = exp(-u^2 - u^4 - ...) -> u^2 coefficient -1
        assert!((c[2] + 1.0).abs() < 1e-15);
        assert_eq!(bump_coeffs(1.0, 4), [0.0; 5]);
    }
}

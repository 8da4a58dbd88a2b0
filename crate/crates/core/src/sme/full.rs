//! Conditional dynamics of qubits and both cavities in a truncated Fock basis.
//!
//! All operators are diagonal in the qubit basis, so the density matrix is
//! kept as 4x4 blocks `X_{q q'}` of Fock-space matrices and every block
//! evolves on its own. Only blocks with `q <= q'` are stored.

use crate::basis::{levels, sz, Mat4};
use crate::cavity::{FieldSample, FieldStep};
use crate::slh::HilbertLayout;
use crate::{Error, Result, SystemParams, C64};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Top-two-level population above which the truncation is rejected.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Row-compressed sparse matrix on the Fock space of both cavities.
#[derive(Clone, Debug)]
struct Sparse {
    rows: Vec<Vec<(usize, C64)>>,
}

impl Sparse {
    fn zero(m: usize) -> Self {
        Sparse { rows: vec![Vec::new(); m] }
    }

    fn from_entries(m: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut s = Sparse::zero(m);
        for (r, c, v) in entries {
            s.push(r, c, v);
        }
        s
    }

    fn push(&mut self, r: usize, c: usize, v: C64) {
        if v == ZERO {
            return;
        }
        match self.rows[r].iter_mut().find(|(cc, _)| *cc == c) {
            Some(e) => e.1 += v,
            None => self.rows[r].push((c, v)),
        }
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn combine(terms: &[(C64, &Sparse)]) -> Self {
        let mut out = Sparse::zero(terms[0].1.dim());
        for (coef, op) in terms {
            for (r, row) in op.rows.iter().enumerate() {
                for &(c, v) in row {
                    out.push(r, c, *coef * v);
                }
            }
        }
        out
    }

    fn adjoint(&self) -> Self {
        let mut out = Sparse::zero(self.dim());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                out.push(c, r, v.conj());
            }
        }
        out
    }

    fn matmul(&self, other: &Sparse) -> Self {
        let mut out = Sparse::zero(self.dim());
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                for &(c, w) in &other.rows[k] {
                    out.push(r, c, v * w);
                }
            }
        }
        out
    }

    /// `out += coef * self * x` for a row-major `m x m` block.
    fn left_acc(&self, x: &[C64], coef: C64, out: &mut [C64]) {
        let m = self.dim();
        for (r, row) in self.rows.iter().enumerate() {
            let dst = &mut out[r * m..(r + 1) * m];
            for &(k, v) in row {
                let w = coef * v;
                let src = &x[k * m..(k + 1) * m];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }

    /// `out += coef * x * self^dag`.
    fn right_adj_acc(&self, x: &[C64], coef: C64, out: &mut [C64]) {
        let m = self.dim();
        for r in 0..m {
            let src = &x[r * m..(r + 1) * m];
            let dst = &mut out[r * m..(r + 1) * m];
            for (c, row) in self.rows.iter().enumerate() {
                let mut acc = ZERO;
                for &(k, v) in row {
                    acc += src[k] * v.conj();
                }
                dst[c] += coef * acc;
            }
        }
    }

    /// `out += coef * self * x * self^dag`, using `tmp` as scratch.
    fn sandwich_acc(&self, x: &[C64], coef: C64, tmp: &mut [C64], out: &mut [C64]) {
        tmp.iter_mut().for_each(|v| *v = ZERO);
        self.left_acc(x, C64::new(1.0, 0.0), tmp);
        self.right_adj_acc(tmp, coef, out);
    }
}

/// Time-independent operators of the full model.
#[derive(Clone, Debug)]
pub struct FullModel {
    pub layout: HilbertLayout,
    pub params: SystemParams,
    a: Sparse,
    b: Sparse,
    ad: Sparse,
    bd: Sparse,
    z: Sparse,
    /// Drive-independent part of `H - (i/2) sum L^dag L` for each qubit state.
    k_static: Vec<Sparse>,
    /// Upper-triangle block pairs.
    pairs: Vec<(usize, usize)>,
}

impl FullModel {
    pub fn new(params: &SystemParams, layout: HilbertLayout) -> Result<Self> {
        params.validate()?;
        if layout.n_a < 3 || layout.n_b < 3 {
            return Err(Error::param("fock_levels", "need at least three Fock levels per cavity"));
        }
        let p = params.clone();
        let (na, nb) = (layout.n_a, layout.n_b);
        let m = na * nb;
        let idx = |i: usize, j: usize| i * nb + j;
        let re = |x: f64| C64::new(x, 0.0);

        let a = Sparse::from_entries(
            m,
            (1..na).flat_map(|i| (0..nb).map(move |j| (idx(i - 1, j), idx(i, j), re((i as f64).sqrt())))),
        );
        let b = Sparse::from_entries(
            m,
            (0..na).flat_map(|i| (1..nb).map(move |j| (idx(i, j - 1), idx(i, j), re((j as f64).sqrt())))),
        );
        let ad = a.adjoint();
        let bd = b.adjoint();
        let n_a = ad.matmul(&a);
        let n_b = bd.matmul(&b);
        let z = Sparse::combine(&[(re(-p.s1()), &a), (re(p.kappa2.sqrt()), &b)]);
        let zdz = z.adjoint().matmul(&z);
        let adb = ad.matmul(&b);
        let bda = bd.matmul(&a);

        let mut k_static = Vec::with_capacity(4);
        for q in 0..4 {
            let (i, j) = levels(q);
            let h_a = re(p.delta1 + p.chi1 * sz(i));
            let h_b = re(p.delta2 + p.chi2 * sz(j));
            let coupling = -0.5 * I * p.kappa12();
            k_static.push(Sparse::combine(&[
                (h_a, &n_a),
                (h_b, &n_b),
                (coupling, &adb),
                (-coupling, &bda),
                (-0.5 * I * p.c1(), &n_a),
                (-0.5 * I * p.gamma2, &n_b),
                (-0.5 * I, &zdz),
            ]));
        }
        let pairs = (0..4).flat_map(|q| (q..4).map(move |qq| (q, qq))).collect();
        Ok(FullModel { layout, params: p, a, b, ad, bd, z, k_static, pairs })
    }

    fn m(&self) -> usize {
        self.layout.n_a * self.layout.n_b
    }

    fn k_ops(&self, s: &FieldSample) -> Vec<Sparse> {
        let (ad, bd) = (s.a_d, s.b_d);
        self.k_static
            .iter()
            .map(|k| {
                Sparse::combine(&[
                    (C64::new(1.0, 0.0), k),
                    (I * ad, &self.ad),
                    (-I * ad.conj(), &self.a),
                    (I * bd, &self.bd),
                    (-I * bd.conj(), &self.b),
                ])
            })
            .collect()
    }

    fn dephasing(&self, q: usize, qq: usize) -> f64 {
        let (i, j) = levels(q);
        let (k, l) = levels(qq);
        let mut r = 0.0;
        if i != k {
            r -= 2.0 * self.params.gamma_d1;
        }
        if j != l {
            r -= 2.0 * self.params.gamma_d2;
        }
        r
    }

    /// Generator with the monitored jump term removed, for one block.
    #[allow(clippy::too_many_arguments)]
    fn generator(&self, k: &[Sparse], jump: f64, q: usize, qq: usize, x: &[C64], tmp: &mut [C64], out: &mut [C64]) {
        let p = &self.params;
        out.iter_mut().zip(x).for_each(|(o, v)| *o = *v * self.dephasing(q, qq));
        k[q].left_acc(x, -I, out);
        k[qq].right_adj_acc(x, I, out);
        if p.c1() > 0.0 {
            self.a.sandwich_acc(x, C64::new(p.c1(), 0.0), tmp, out);
        }
        if p.gamma2 > 0.0 {
            self.b.sandwich_acc(x, C64::new(p.gamma2, 0.0), tmp, out);
        }
        if jump > 0.0 {
            self.z.sandwich_acc(x, C64::new(jump, 0.0), tmp, out);
        }
    }

    /// Fourth-order Runge-Kutta step of the deterministic part.
    fn rk4(&self, state: &mut FullState, step: &FieldStep, jump: f64) {
        let m2 = self.m() * self.m();
        let k0 = self.k_ops(&step.start);
        let km = self.k_ops(&step.mid);
        let k1 = self.k_ops(&step.end);
        let h = step.dt;
        let mut tmp = vec![ZERO; m2];
        let mut stage = vec![ZERO; m2];
        let mut kk = vec![ZERO; m2];
        let mut acc = vec![ZERO; m2];
        for (slot, &(q, qq)) in self.pairs.iter().enumerate() {
            let x = &mut state.blocks[slot];
            self.generator(&k0, jump, q, qq, x, &mut tmp, &mut kk);
            for i in 0..m2 {
                acc[i] = kk[i];
                stage[i] = x[i] + kk[i] * (0.5 * h);
            }
            self.generator(&km, jump, q, qq, &stage, &mut tmp, &mut kk);
            for i in 0..m2 {
                acc[i] += kk[i] * 2.0;
                stage[i] = x[i] + kk[i] * (0.5 * h);
            }
            self.generator(&km, jump, q, qq, &stage, &mut tmp, &mut kk);
            for i in 0..m2 {
                acc[i] += kk[i] * 2.0;
                stage[i] = x[i] + kk[i] * h;
            }
            self.generator(&k1, jump, q, qq, &stage, &mut tmp, &mut kk);
            for i in 0..m2 {
                x[i] += (acc[i] + kk[i]) * (h / 6.0);
            }
        }
    }

    /// `<c>` with `c = e^{i phi} z`.
    pub fn mean_output(&self, state: &FullState) -> C64 {
        let m = self.m();
        let mut acc = ZERO;
        for q in 0..4 {
            let x = &state.blocks[state.slot(q, q)];
            for (r, row) in self.z.rows.iter().enumerate() {
                for &(k, v) in row {
                    acc += v * x[k * m + r];
                }
            }
        }
        acc * C64::from_polar(1.0, self.params.phi)
    }

    /// Measurement update with `F = 1 + sqrt(eta_m) c dY`.
    fn measure(&self, state: &mut FullState, dy: f64) {
        let m2 = self.m() * self.m();
        let coef = C64::from_polar(self.params.eta_m.sqrt() * dy, self.params.phi);
        let mut fx = vec![ZERO; m2];
        for x in state.blocks.iter_mut() {
            fx.copy_from_slice(x);
            self.z.left_acc(x, coef, &mut fx);
            x.copy_from_slice(&fx);
            let src = fx.clone();
            self.z.right_adj_acc(&src, coef.conj(), x);
        }
    }

    /// One conditional step; returns `(dY, V dt)`.
    pub fn step(&self, state: &mut FullState, step: &FieldStep, dw: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        let mean = self.mean_output(state);
        let dy = dw + p.eta_m.sqrt() * 2.0 * mean.re * step.dt;
        let v_dt = crate::sme::homodyne_increment(mean, p.eta_m, dw, step.dt);
        self.measure(state, dy);
        self.rk4(state, step, 1.0 - p.eta_m);
        state.t = step.end.t();
        state.normalize()?;
        let top = state.top_population();
        if top > TRUNCATION_TOLERANCE {
            return Err(Error::Truncation { t: state.t, population: top });
        }
        Ok((dy, v_dt))
    }

    /// Ensemble-averaged step (no measurement update, full jump term).
    pub fn step_unconditioned(&self, state: &mut FullState, step: &FieldStep) -> Result<()> {
        self.rk4(state, step, 1.0);
        state.t = step.end.t();
        state.normalize()
    }

    /// Conditional cavity amplitudes `<a>` and `<b>` given each basis state.
    pub fn conditional_fields(&self, state: &FullState) -> ([C64; 4], [C64; 4]) {
        let m = self.m();
        let mut fa = [ZERO; 4];
        let mut fb = [ZERO; 4];
        for q in 0..4 {
            let x = &state.blocks[state.slot(q, q)];
            let tr: C64 = (0..m).map(|r| x[r * m + r]).sum();
            let expect = |op: &Sparse| {
                let mut acc = ZERO;
                for (r, row) in op.rows.iter().enumerate() {
                    for &(k, v) in row {
                        acc += v * x[k * m + r];
                    }
                }
                acc / tr
            };
            fa[q] = expect(&self.a);
            fb[q] = expect(&self.b);
        }
        (fa, fb)
    }
}

#[derive(Clone, Debug)]
pub struct FullState {
    pub n_a: usize,
    pub n_b: usize,
    pub t: f64,
    /// Blocks `(q, q')`, `q <= q'`, row-major in the Fock index `n_a * N_b + n_b`.
    blocks: Vec<Vec<C64>>,
}

impl FullState {
    /// Qubit state times the cavity vacuum.
    pub fn product_vacuum(rho: &Mat4, layout: HilbertLayout, t: f64) -> Self {
        let m = layout.n_a * layout.n_b;
        let mut blocks = Vec::with_capacity(10);
        for q in 0..4 {
            for qq in q..4 {
                let mut x = vec![ZERO; m * m];
                x[0] = rho[(q, qq)];
                blocks.push(x);
            }
        }
        FullState { n_a: layout.n_a, n_b: layout.n_b, t, blocks }
    }

    fn m(&self) -> usize {
        self.n_a * self.n_b
    }

    fn slot(&self, q: usize, qq: usize) -> usize {
        debug_assert!(q <= qq);
        // Row q of the upper triangle starts after 4 + 3 + ... entries.
        let before = [0, 4, 7, 9][q];
        before + (qq - q)
    }

    fn trace(&self) -> f64 {
        let m = self.m();
        (0..4)
            .map(|q| {
                let x = &self.blocks[self.slot(q, q)];
                (0..m).map(|r| x[r * m + r].re).sum::<f64>()
            })
            .sum()
    }

    fn normalize(&mut self) -> Result<()> {
        let m = self.m();
        for q in 0..4 {
            let s = self.slot(q, q);
            let x = &mut self.blocks[s];
            let mut skew: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for r in 0..m {
                for c in r..m {
                    let (u, l) = (x[r * m + c], x[c * m + r]);
                    skew = skew.max((u - l.conj()).norm());
                    scale = scale.max(u.norm());
                    let avg = 0.5 * (u + l.conj());
                    x[r * m + c] = avg;
                    x[c * m + r] = avg.conj();
                }
            }
            if skew > crate::sme::HERMITICITY_TOLERANCE * scale.max(1.0) {
                return Err(Error::Numerical(format!(
                    "full state lost Hermiticity ({skew:e}) at t = {} us; reduce dt",
                    self.t
                )));
            }
        }
        let tr = self.trace();
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::Numerical(format!("full state trace collapsed to {tr}")));
        }
        for x in self.blocks.iter_mut() {
            x.iter_mut().for_each(|v| *v /= tr);
        }
        Ok(())
    }

    /// Population in the two highest Fock levels of either cavity.
    pub fn top_population(&self) -> f64 {
        let m = self.m();
        let mut pop = 0.0;
        for q in 0..4 {
            let x = &self.blocks[self.slot(q, q)];
            for i in 0..self.n_a {
                for j in 0..self.n_b {
                    if i + 2 >= self.n_a || j + 2 >= self.n_b {
                        let r = i * self.n_b + j;
                        pop += x[r * m + r].re;
                    }
                }
            }
        }
        pop
    }

    /// Reduced state of the qubits.
    pub fn qubit_marginal(&self) -> Mat4 {
        let m = self.m();
        let mut rho = Mat4::zeros();
        for q in 0..4 {
            for qq in q..4 {
                let x = &self.blocks[self.slot(q, qq)];
                let tr: C64 = (0..m).map(|r| x[r * m + r]).sum();
                rho[(q, qq)] = tr;
                rho[(qq, q)] = tr.conj();
            }
        }
        rho
    }
}

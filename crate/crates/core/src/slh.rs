//! SLH triples on a truncated two-qubit, two-cavity Hilbert space.
//!
//! Operators are dense matrices. Scalar entries (beam splitter amplitudes,
//! coherent drives) are stored as `scalar * identity` and remember that they
//! are scalars, so products involving them stay cheap.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result, SystemParams, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Ordering `|q> (x) |n_a> (x) |n_b>` with `q = 2 i + j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertLayout {
    pub n_a: usize,
    pub n_b: usize,
}

impl HilbertLayout {
    pub fn new(n_a: usize, n_b: usize) -> Self {
        HilbertLayout { n_a, n_b }
    }

    pub fn dim(&self) -> usize {
        4 * self.n_a * self.n_b
    }

    pub fn index(&self, q: usize, na: usize, nb: usize) -> usize {
        (q * self.n_a + na) * self.n_b + nb
    }

    fn from_fn(&self, f: impl Fn(usize, usize, usize) -> Option<(usize, C64)>) -> Operator {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for q in 0..4 {
            for na in 0..self.n_a {
                for nb in 0..self.n_b {
                    let col = self.index(q, na, nb);
                    if let Some((row, v)) = f(q, na, nb) {
                        m[(row, col)] += v;
                    }
                }
            }
        }
        Operator::dense(m)
    }

    pub fn identity(&self) -> Operator {
        Operator::scalar(self.dim(), C64::new(1.0, 0.0))
    }

    pub fn zero(&self) -> Operator {
        Operator::scalar(self.dim(), C64::new(0.0, 0.0))
    }

    pub fn a(&self) -> Operator {
        self.from_fn(|q, na, nb| (na > 0).then(|| (self.index(q, na - 1, nb), C64::new((na as f64).sqrt(), 0.0))))
    }

    pub fn b(&self) -> Operator {
        self.from_fn(|q, na, nb| (nb > 0).then(|| (self.index(q, na, nb - 1), C64::new((nb as f64).sqrt(), 0.0))))
    }

    pub fn sigma_z(&self, qubit: usize) -> Operator {
        self.from_fn(|q, na, nb| {
            let level = if qubit == 0 { q >> 1 } else { q & 1 };
            Some((self.index(q, na, nb), C64::new(crate::basis::sz(level), 0.0)))
        })
    }
}

#[derive(Clone, Debug)]
pub struct Operator {
    m: DMatrix<C64>,
    scalar: Option<C64>,
}

impl Operator {
    pub fn dense(m: DMatrix<C64>) -> Self {
        Operator { m, scalar: None }
    }

    pub fn scalar(dim: usize, c: C64) -> Self {
        Operator { m: DMatrix::from_diagonal_element(dim, dim, c), scalar: Some(c) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_scalar(&self) -> Option<C64> {
        self.scalar
    }

    pub fn adjoint(&self) -> Operator {
        Operator { m: self.m.adjoint(), scalar: self.scalar.map(|c| c.conj()) }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator { m: &self.m * c, scalar: self.scalar.map(|s| s * c) }
    }

    pub fn scale_re(&self, x: f64) -> Operator {
        self.scale(C64::new(x, 0.0))
    }

    /// Anti-Hermitian part divided by `i`, i.e. `(X - X^dag) / (2 i)`.
    pub fn im_part(&self) -> Operator {
        (self - &self.adjoint()).scale(-0.5 * I)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        (&self.m - &other.m).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    fn check(&self, other: &Operator) {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.check(rhs);
        let scalar = match (self.scalar, rhs.scalar) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Operator { m: &self.m + &rhs.m, scalar }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self + &(-rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.check(rhs);
        match (self.scalar, rhs.scalar) {
            (Some(a), Some(b)) => Operator::scalar(self.dim(), a * b),
            (Some(a), None) => rhs.scale(a),
            (None, Some(b)) => self.scale(b),
            (None, None) => Operator::dense(&self.m * &rhs.m),
        }
    }
}

/// `(S, L, H)` with `n` ports: `s` is row-major `n x n`.
#[derive(Clone, Debug)]
pub struct SlhTriple {
    pub s: Vec<Operator>,
    pub l: Vec<Operator>,
    pub h: Operator,
}

impl SlhTriple {
    pub fn ports(&self) -> usize {
        self.l.len()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn s_at(&self, r: usize, c: usize) -> &Operator {
        &self.s[r * self.ports() + c]
    }

    /// Pass-through wire with no internal dynamics.
    pub fn identity(dim: usize, ports: usize) -> Self {
        let s = (0..ports * ports)
            .map(|k| {
                let v = if k / ports == k % ports { 1.0 } else { 0.0 };
                Operator::scalar(dim, C64::new(v, 0.0))
            })
            .collect();
        let l = (0..ports).map(|_| Operator::scalar(dim, C64::new(0.0, 0.0))).collect();
        SlhTriple { s, l, h: Operator::scalar(dim, C64::new(0.0, 0.0)) }
    }

    /// Single-port triple from its three components.
    pub fn single(s: Operator, l: Operator, h: Operator) -> Self {
        SlhTriple { s: vec![s], l: vec![l], h }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ports();
        if self.s.len() != n * n {
            return Err(Error::Dimension(format!("S has {} entries for {n} ports", self.s.len())));
        }
        let d = self.dim();
        if self.s.iter().chain(self.l.iter()).any(|op| op.dim() != d) {
            return Err(Error::Dimension("operator dimensions differ within a triple".into()));
        }
        Ok(())
    }

    /// Largest entry of `S^dag S - 1`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.ports();
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let mut acc = Operator::scalar(d, C64::new(if r == c { -1.0 } else { 0.0 }, 0.0));
                for k in 0..n {
                    acc = &acc + &(&self.s_at(k, r).adjoint() * self.s_at(k, c));
                }
                worst = worst.max(acc.matrix().iter().fold(0.0, |a, z| a.max(z.norm())));
            }
        }
        worst
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.h.max_abs_diff(&self.h.adjoint())
    }

    /// Largest entry-wise difference of all three components.
    pub fn max_abs_diff(&self, other: &SlhTriple) -> f64 {
        let s = self.s.iter().zip(&other.s).map(|(a, b)| a.max_abs_diff(b));
        let l = self.l.iter().zip(&other.l).map(|(a, b)| a.max_abs_diff(b));
        s.chain(l).fold(self.h.max_abs_diff(&other.h), f64::max)
    }
}

/// Series product `g2 <| g1`: the output of `g1` feeds `g2`.
pub fn series(g2: &SlhTriple, g1: &SlhTriple) -> Result<SlhTriple> {
    g1.validate()?;
    g2.validate()?;
    let n = g1.ports();
    if g2.ports() != n {
        return Err(Error::Dimension(format!("series of {} and {} ports", g2.ports(), n)));
    }
    if g1.dim() != g2.dim() {
        return Err(Error::Dimension("series of triples on different spaces".into()));
    }
    let d = g1.dim();
    let zero = || Operator::scalar(d, C64::new(0.0, 0.0));

    let mut s = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = zero();
            for k in 0..n {
                acc = &acc + &(g2.s_at(r, k) * g1.s_at(k, c));
            }
            s.push(acc);
        }
    }

    let mut l = Vec::with_capacity(n);
    for r in 0..n {
        let mut acc = g2.l[r].clone();
        for k in 0..n {
            acc = &acc + &(g2.s_at(r, k) * &g1.l[k]);
        }
        l.push(acc);
    }

    let mut cross = zero();
    for r in 0..n {
        let l2_dag = g2.l[r].adjoint();
        for k in 0..n {
            cross = &cross + &(&l2_dag * &(g2.s_at(r, k) * &g1.l[k]));
        }
    }
    let h = &(&g1.h + &g2.h) + &cross.im_part();
    Ok(SlhTriple { s, l, h })
}

/// Concatenation `a (+) b`: block-diagonal scattering, stacked couplings.
pub fn concat(a: &SlhTriple, b: &SlhTriple) -> Result<SlhTriple> {
    a.validate()?;
    b.validate()?;
    if a.dim() != b.dim() {
        return Err(Error::Dimension("concatenation of triples on different spaces".into()));
    }
    let (na, nb) = (a.ports(), b.ports());
    let n = na + nb;
    let d = a.dim();
    let mut s = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let op = if r < na && c < na {
                a.s_at(r, c).clone()
            } else if r >= na && c >= na {
                b.s_at(r - na, c - na).clone()
            } else {
                Operator::scalar(d, C64::new(0.0, 0.0))
            };
            s.push(op);
        }
    }
    let l = a.l.iter().chain(&b.l).cloned().collect();
    Ok(SlhTriple { s, l, h: &a.h + &b.h })
}

pub fn concat_all(parts: &[&SlhTriple]) -> Result<SlhTriple> {
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = concat(&acc, p)?;
    }
    Ok(acc)
}

/// Shift `L_k -> L_k + alpha_k`, compensating in `H` so the Lindblad
/// generator is unchanged.
pub fn shift_coherent(g: &SlhTriple, alpha: &[C64]) -> Result<SlhTriple> {
    if alpha.len() != g.ports() {
        return Err(Error::Dimension(format!("{} shift amplitudes for {} ports", alpha.len(), g.ports())));
    }
    let d = g.dim();
    let mut h = g.h.clone();
    let mut l = Vec::with_capacity(g.ports());
    for (lk, &ak) in g.l.iter().zip(alpha) {
        let correction = &lk.scale(ak.conj()) - &lk.adjoint().scale(ak);
        h = &h - &correction.scale(0.5 * I);
        l.push(lk + &Operator::scalar(d, ak));
    }
    Ok(SlhTriple { s: g.s.clone(), l, h })
}

/// `rho' = -i[H, rho] + sum_k D[L_k] rho`.
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    pub h: DMatrix<C64>,
    pub ls: Vec<DMatrix<C64>>,
}

impl LindbladGenerator {
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = (&self.h * rho - rho * &self.h) * (-I);
        for l in &self.ls {
            let lr = l * rho;
            let ldl = l.adjoint() * l;
            let anti = &ldl * rho + rho * &ldl;
            out += &lr * l.adjoint() - anti * C64::new(0.5, 0.0);
        }
        out
    }

    /// Heisenberg-picture action `i[H, X] + sum_k (L^dag X L - {L^dag L, X}/2)`.
    pub fn adjoint_apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = (&self.h * x - x * &self.h) * I;
        for l in &self.ls {
            let ld = l.adjoint();
            let ldl = &ld * l;
            out += &ld * x * l - (&ldl * x + x * &ldl) * C64::new(0.5, 0.0);
        }
        out
    }

    pub fn with_dephasing(mut self, layout: &HilbertLayout, gamma_d1: f64, gamma_d2: f64) -> Self {
        for (q, g) in [(0, gamma_d1), (1, gamma_d2)] {
            if g > 0.0 {
                self.ls.push(layout.sigma_z(q).scale_re(g.sqrt()).matrix().clone());
            }
        }
        self
    }
}

pub fn to_lindblad_generator(g: &SlhTriple) -> LindbladGenerator {
    LindbladGenerator { h: g.h.matrix().clone(), ls: g.l.iter().map(|l| l.matrix().clone()).collect() }
}

/// Port amplitudes driving the network at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PortDrives {
    /// Probe entering the first cavity through the transmission line port.
    pub eps: C64,
    /// Direct drive of cavity 1 through its weak port.
    pub a_bar: C64,
    /// Direct drive of cavity 2 through its weak port.
    pub b_bar: C64,
}

impl PortDrives {
    pub fn a_d(&self, p: &SystemParams) -> C64 {
        self.a_bar * p.gamma1.sqrt() + self.eps * p.kappa1.sqrt()
    }

    pub fn b_d(&self, p: &SystemParams) -> C64 {
        self.b_bar * p.gamma2.sqrt() - self.eps * (p.kappa2 * p.eta_l).sqrt()
    }
}

fn h_cavity(layout: &HilbertLayout, mode: &Operator, delta: f64, chi: f64, qubit: usize) -> Operator {
    let n = &mode.adjoint() * mode;
    &n.scale_re(delta) + &(&n * &layout.sigma_z(qubit)).scale_re(chi)
}

/// Cavity 1: two ports (line, weak port), each reflecting with a sign flip.
pub fn cavity_a_component(p: &SystemParams, layout: &HilbertLayout) -> SlhTriple {
    let d = layout.dim();
    let a = layout.a();
    let m1 = Operator::scalar(d, C64::new(-1.0, 0.0));
    let z = Operator::scalar(d, C64::new(0.0, 0.0));
    SlhTriple {
        s: vec![m1.clone(), z.clone(), z, m1],
        l: vec![a.scale_re(p.kappa1.sqrt()), a.scale_re(p.gamma1.sqrt())],
        h: h_cavity(layout, &a, p.delta1, p.chi1, 0),
    }
}

/// Beam splitter modelling line loss; the second input is vacuum.
pub fn loss_component(p: &SystemParams, dim: usize) -> SlhTriple {
    let t = C64::new(p.eta_l.sqrt(), 0.0);
    let r = C64::new(0.0, (1.0 - p.eta_l).sqrt());
    SlhTriple {
        s: vec![Operator::scalar(dim, t), Operator::scalar(dim, r), Operator::scalar(dim, r), Operator::scalar(dim, t)],
        l: vec![Operator::scalar(dim, C64::new(0.0, 0.0)); 2],
        h: Operator::scalar(dim, C64::new(0.0, 0.0)),
    }
}

/// Cavity 2 seen from the line port, carrying its Hamiltonian.
pub fn cavity_b_line_component(p: &SystemParams, layout: &HilbertLayout) -> SlhTriple {
    let b = layout.b();
    SlhTriple::single(
        Operator::scalar(layout.dim(), C64::new(-1.0, 0.0)),
        b.scale_re(p.kappa2.sqrt()),
        h_cavity(layout, &b, p.delta2, p.chi2, 1),
    )
}

/// Cavity 2 seen from its weak port.
pub fn cavity_b_weak_component(p: &SystemParams, layout: &HilbertLayout) -> SlhTriple {
    let d = layout.dim();
    SlhTriple::single(
        Operator::scalar(d, C64::new(-1.0, 0.0)),
        layout.b().scale_re(p.gamma2.sqrt()),
        Operator::scalar(d, C64::new(0.0, 0.0)),
    )
}

fn source(dim: usize, amp: C64) -> SlhTriple {
    SlhTriple::single(
        Operator::scalar(dim, C64::new(1.0, 0.0)),
        Operator::scalar(dim, amp),
        Operator::scalar(dim, C64::new(0.0, 0.0)),
    )
}

/// The composed network before and after removing the coherent offsets.
pub struct CascadeNetwork {
    pub raw: SlhTriple,
    pub normalized: SlhTriple,
    /// Shifts applied to the output couplings.
    pub shifts: [C64; 4],
}

/// Compose sources, cavity 1, line loss and cavity 2 into a four-port network.
///
/// Output ports: 1 loss channel of the line, 2 the monitored output,
/// 3 weak port of cavity 1, 4 weak port of cavity 2.
pub fn build_cascade_network(p: &SystemParams, drives: &PortDrives, layout: &HilbertLayout) -> Result<CascadeNetwork> {
    p.validate()?;
    let d = layout.dim();
    let wire = SlhTriple::identity(d, 1);
    let sources = concat_all(&[&wire, &source(d, drives.eps), &source(d, drives.a_bar), &source(d, drives.b_bar)])?;
    let cav_a = concat_all(&[&wire, &cavity_a_component(p, layout), &wire])?;
    let loss = concat_all(&[&loss_component(p, d), &wire, &wire])?;
    let cav_b = concat_all(&[&wire, &cavity_b_line_component(p, layout), &wire, &cavity_b_weak_component(p, layout)])?;
    let raw = series(&cav_b, &series(&loss, &series(&cav_a, &sources)?)?)?;

    let shifts = [I * (1.0 - p.eta_l).sqrt() * drives.eps, -drives.eps * p.eta_l.sqrt(), drives.a_bar, drives.b_bar];
    let normalized = shift_coherent(&raw, &shifts)?;
    Ok(CascadeNetwork { raw, normalized, shifts })
}

/// Closed-form expression of the composed network, written out by hand.
pub fn reference_cascade_triple(
    p: &SystemParams,
    drives: &PortDrives,
    layout: &HilbertLayout,
    normalized: bool,
) -> SlhTriple {
    let d = layout.dim();
    let sc = |c: C64| Operator::scalar(d, c);
    let re = |x: f64| C64::new(x, 0.0);
    let (a, b) = (layout.a(), layout.b());
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let t = p.eta_l.sqrt();
    let r = (1.0 - p.eta_l).sqrt();
    let zero = sc(re(0.0));

    let s = vec![
        sc(re(t)),
        sc(-I * r),
        zero.clone(),
        zero.clone(),
        sc(-I * r),
        sc(re(t)),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        sc(re(-1.0)),
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero,
        sc(re(-1.0)),
    ];

    let ka = a.scale_re(p.kappa1.sqrt());
    let l = if normalized {
        vec![
            ka.scale(I * r),
            &a.scale_re(-p.s1()) + &b.scale_re(p.kappa2.sqrt()),
            a.scale_re(p.gamma1.sqrt()),
            b.scale_re(p.gamma2.sqrt()),
        ]
    } else {
        vec![
            (&sc(-drives.eps) + &ka).scale(I * r),
            &(&sc(drives.eps * t) + &a.scale_re(-p.s1())) + &b.scale_re(p.kappa2.sqrt()),
            &sc(-drives.a_bar) + &a.scale_re(p.gamma1.sqrt()),
            &sc(-drives.b_bar) + &b.scale_re(p.gamma2.sqrt()),
        ]
    };

    let ad_drive = drives.a_d(p);
    let bd_drive = drives.b_d(p);
    let weight = if normalized { 1.0 } else { 0.5 };
    let drive_term = |m: &Operator, md: &Operator, c: C64| (&md.scale(c) - &m.scale(c.conj())).scale(I * weight);
    let coupling = (&(&ad * &b) - &(&bd * &a)).scale(-0.5 * I * p.kappa12());
    let h = &(&(&(&h_cavity(layout, &a, p.delta1, p.chi1, 0) + &h_cavity(layout, &b, p.delta2, p.chi2, 1))
        + &drive_term(&a, &ad, ad_drive))
        + &drive_term(&b, &bd, bd_drive))
        + &coupling;
    SlhTriple { s, l, h }
}

/// Random density matrix from a seeded Ginibre draw.
pub fn random_density_matrix(dim: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Coefficients `c_ab` in `d<a>/dt = ... + c_ab <b>` and `c_ba` in
/// `d<b>/dt = ... + c_ba <a>`, one pair per qubit basis state.
///
/// Read off from the Heisenberg action on the lowest Fock levels, where the
/// truncation has no influence.
pub fn field_cross_coefficients(gen: &LindbladGenerator, layout: &HilbertLayout) -> Vec<[C64; 2]> {
    let la = gen.adjoint_apply(layout.a().matrix());
    let lb = gen.adjoint_apply(layout.b().matrix());
    (0..4)
        .map(|q| {
            let vac = layout.index(q, 0, 0);
            [la[(vac, layout.index(q, 0, 1))], lb[(vac, layout.index(q, 1, 0))]]
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationClause {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub n_a: usize,
    pub n_b: usize,
    pub clauses: Vec<VerificationClause>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, max_error: f64, tolerance: f64) {
        self.clauses.push(VerificationClause {
            name: name.to_string(),
            max_error,
            tolerance,
            passed: max_error.is_finite() && max_error <= tolerance,
        });
    }
}

/// Check the composed network against the closed form, the shift invariance
/// of the generator on random states, and the one-way field coupling.
pub fn verify_cascade(
    p: &SystemParams,
    drives: &PortDrives,
    layout: &HilbertLayout,
    n_states: usize,
    seed: u64,
) -> Result<VerificationReport> {
    const TOL: f64 = 1e-10;
    let net = build_cascade_network(p, drives, layout)?;
    let mut report = VerificationReport { n_a: layout.n_a, n_b: layout.n_b, clauses: Vec::new() };

    let raw_ref = reference_cascade_triple(p, drives, layout, false);
    let norm_ref = reference_cascade_triple(p, drives, layout, true);
    report.push("raw triple matches closed form", net.raw.max_abs_diff(&raw_ref), TOL);
    report.push(
        "normalized scattering matches closed form",
        net.normalized.s.iter().zip(&norm_ref.s).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max),
        TOL,
    );
    report.push(
        "normalized couplings match closed form",
        net.normalized.l.iter().zip(&norm_ref.l).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max),
        TOL,
    );
    report.push("normalized Hamiltonian matches closed form", net.normalized.h.max_abs_diff(&norm_ref.h), TOL);
    report.push("scattering matrix unitary", net.normalized.unitarity_defect(), TOL);
    report.push("Hamiltonian Hermitian", net.normalized.hermiticity_defect(), TOL);

    let g_raw = to_lindblad_generator(&net.raw);
    let g_norm = to_lindblad_generator(&net.normalized);
    let mut worst: f64 = 0.0;
    for k in 0..n_states {
        let rho = random_density_matrix(layout.dim(), seed.wrapping_add(k as u64));
        worst = worst.max(max_abs(&(g_raw.apply(&rho) - g_norm.apply(&rho))));
    }
    report.push("generator invariant under coupling shift", worst, TOL);

    let cross = field_cross_coefficients(&g_norm, layout);
    let back = cross.iter().map(|c| c[0].norm()).fold(0.0, f64::max);
    let forward = cross.iter().map(|c| (c[1] - C64::new(p.kappa12(), 0.0)).norm()).fold(0.0, f64::max);
    report.push("no backaction of cavity 2 on cavity 1", back, TOL);
    report.push("forward coupling equals kappa12", forward, TOL * p.kappa12().max(1.0));
    Ok(report)
}
